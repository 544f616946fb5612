use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A 3-character ICD-10 category code such as `A00`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IcdCode([u8; 3]);

impl IcdCode {
    pub fn new(letter: char, number: u8) -> Result<Self> {
        if !letter.is_ascii_uppercase() || number > 99 {
            return Err(Error::Validation(format!("invalid ICD-10 code {letter}{number:02}")));
        }
        Ok(IcdCode([letter as u8, b'0' + number / 10, b'0' + number % 10]))
    }

    pub fn letter(self) -> char {
        self.0[0] as char
    }

    pub fn number(self) -> u8 {
        (self.0[1] - b'0') * 10 + (self.0[2] - b'0')
    }

    pub fn as_str(&self) -> &str {
        // Only ASCII bytes are ever stored.
        std::str::from_utf8(&self.0).expect("ascii")
    }

    /// All 2600 syntactically valid codes, `A00` through `Z99`.
    pub fn all() -> impl Iterator<Item = IcdCode> {
        (b'A'..=b'Z').flat_map(|l| (0..100u8).map(move |n| IcdCode::new(l as char, n).unwrap()))
    }
}

impl FromStr for IcdCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let b = s.as_bytes();
        if b.len() == 3 && b[0].is_ascii_uppercase() && b[1].is_ascii_digit() && b[2].is_ascii_digit() {
            Ok(IcdCode([b[0], b[1], b[2]]))
        } else {
            Err(Error::Validation(format!(
                "invalid ICD-10 code {s:?}: expected a letter followed by two digits"
            )))
        }
    }
}

impl fmt::Display for IcdCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for IcdCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IcdCode({})", self.as_str())
    }
}

/// A UMLS concept unique identifier, `C` followed by seven digits.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cui(u32);

impl Cui {
    pub const MAX: u32 = 9_999_999;

    pub fn from_number(n: u32) -> Result<Self> {
        if n > Self::MAX {
            return Err(Error::Validation(format!("CUI number {n} has more than 7 digits")));
        }
        Ok(Cui(n))
    }

    pub fn number(self) -> u32 {
        self.0
    }
}

impl FromStr for Cui {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s
            .strip_prefix('C')
            .filter(|d| d.len() == 7 && d.bytes().all(|b| b.is_ascii_digit()));
        match digits {
            Some(d) => Ok(Cui(d.parse().expect("seven ascii digits"))),
            None => Err(Error::Validation(format!(
                "invalid CUI {s:?}: expected C followed by 7 digits"
            ))),
        }
    }
}

impl fmt::Display for Cui {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{:07}", self.0)
    }
}

impl fmt::Debug for Cui {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cui({self})")
    }
}

/// ICD-10 chapter number, displayed as a Roman numeral (I..XXII).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ChapterId(u8);

const ROMAN: [&str; 22] = [
    "I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX", "X", "XI", "XII", "XIII", "XIV", "XV", "XVI", "XVII",
    "XVIII", "XIX", "XX", "XXI", "XXII",
];

impl ChapterId {
    pub fn new(n: u8) -> Result<Self> {
        if (1..=22).contains(&n) {
            Ok(ChapterId(n))
        } else {
            Err(Error::Validation(format!("chapter number {n} outside I..XXII")))
        }
    }

    pub fn number(self) -> u8 {
        self.0
    }

    pub fn roman(self) -> &'static str {
        ROMAN[usize::from(self.0) - 1]
    }
}

impl FromStr for ChapterId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ROMAN
            .iter()
            .position(|r| *r == s)
            .map(|i| ChapterId(i as u8 + 1))
            .ok_or_else(|| Error::Validation(format!("unknown ICD-10 chapter {s:?}")))
    }
}

impl fmt::Display for ChapterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.roman())
    }
}

macro_rules! string_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(IcdCode);
string_serde!(Cui);
string_serde!(ChapterId);
