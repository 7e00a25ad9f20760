use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Persistent face track identifier. Allocated monotonically, never recycled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FaceId(pub u64);

impl fmt::Display for FaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "face#{}", self.0)
    }
}

/// Persistent hand track identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HandId(pub u64);

/// A bystander's requested privacy action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrivacyCommand {
    Blur,
    Unblur,
}

impl PrivacyCommand {
    /// Wire code carried in VLC payloads and BLE trigger records.
    pub const fn code(self) -> u8 {
        match self {
            PrivacyCommand::Blur => 0x01,
            PrivacyCommand::Unblur => 0x02,
        }
    }

    pub fn from_code(code: u16) -> Option<Self> {
        match code {
            0x01 => Some(PrivacyCommand::Blur),
            0x02 => Some(PrivacyCommand::Unblur),
            _ => None,
        }
    }

    pub const fn target_state(self) -> PrivacyState {
        match self {
            PrivacyCommand::Blur => PrivacyState::Blurred,
            PrivacyCommand::Unblur => PrivacyState::Clear,
        }
    }

    pub const fn opposite(self) -> Self {
        match self {
            PrivacyCommand::Blur => PrivacyCommand::Unblur,
            PrivacyCommand::Unblur => PrivacyCommand::Blur,
        }
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            PrivacyCommand::Blur => "blur",
            PrivacyCommand::Unblur => "unblur",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrivacyState {
    #[default]
    Clear,
    Blurred,
}

impl PrivacyState {
    pub const fn as_str(self) -> &'static str {
        match self {
            PrivacyState::Clear => "clear",
            PrivacyState::Blurred => "blurred",
        }
    }
}

/// Signaling channel. A scenario runs exactly one at a time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Gesture,
    Vlc,
    Uwb,
}

impl Modality {
    pub const fn as_str(self) -> &'static str {
        match self {
            Modality::Gesture => "gesture",
            Modality::Vlc => "vlc",
            Modality::Uwb => "uwb",
        }
    }
}

/// 48-bit BLE MAC address; text form is 12 hex digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mac(pub [u8; 6]);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid MAC `{0}`: expected 12 hex digits")]
pub struct MacParseError(pub String);

impl FromStr for Mac {
    type Err = MacParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let cleaned: String = s.chars().filter(|c| *c != ':').collect();
        if cleaned.len() != 12 {
            return Err(MacParseError(s.to_string()));
        }
        let mut out = [0u8; 6];
        hex::decode_to_slice(&cleaned, &mut out).map_err(|_| MacParseError(s.to_string()))?;
        Ok(Mac(out))
    }
}

impl fmt::Display for Mac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode_upper(self.0))
    }
}

impl Serialize for Mac {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Mac {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
