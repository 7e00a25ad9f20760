//! OOK packet layout and CRC-4.
//!
//! Default packet (18 bits, transmitted MSB first, one bit per frame):
//!
//! ```text
//! b17..b12  preamble 101011
//! b11..b4   payload  (command byte, MSB first)
//! b3..b0    CRC-4 of the payload, generator x^4 + x + 1
//! ```
//!
//! The payload width can be changed with [`PacketFormat`] so that message
//! length sweeps can run; everything else uses the 8-bit payload.

use serde::{Deserialize, Serialize};

use crate::error::PacketError;
use crate::types::PrivacyCommand;

pub const PREAMBLE: [bool; 6] = [true, false, true, false, true, true];
pub const CRC_BITS: usize = 4;
/// x^4 + x + 1 without the implicit x^4 term.
pub const CRC4_POLY: u8 = 0b0011;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketFormat {
    pub payload_bits: u8,
}

impl Default for PacketFormat {
    fn default() -> Self {
        PacketFormat { payload_bits: 8 }
    }
}

impl PacketFormat {
    /// Format whose total length is `total_bits` (preamble + payload + CRC).
    pub fn with_total_bits(total_bits: usize) -> Option<Self> {
        let fixed = PREAMBLE.len() + CRC_BITS;
        if total_bits <= fixed || total_bits - fixed > 16 {
            return None;
        }
        Some(PacketFormat { payload_bits: (total_bits - fixed) as u8 })
    }

    pub fn total_bits(&self) -> usize {
        PREAMBLE.len() + self.payload_bits as usize + CRC_BITS
    }
}

/// CRC-4 over an arbitrary bit string (MSB first): remainder of
/// `M(x) * x^4 mod (x^4 + x + 1)`, zero initial register.
pub fn crc4_bits(bits: &[bool]) -> u8 {
    let mut reg = 0u8;
    for &b in bits {
        let feedback = ((reg >> 3) & 1 == 1) ^ b;
        reg = (reg << 1) & 0x0F;
        if feedback {
            reg ^= CRC4_POLY;
        }
    }
    reg
}

pub fn crc4(payload: u8) -> u8 {
    crc4_bits(&to_bits(payload as u32, 8))
}

fn to_bits(value: u32, width: usize) -> Vec<bool> {
    (0..width).rev().map(|i| (value >> i) & 1 == 1).collect()
}

fn from_bits(bits: &[bool]) -> u32 {
    bits.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32)
}

/// Encode a raw payload code in the given format.
pub fn encode_code(code: u16, format: PacketFormat) -> Result<Vec<bool>, PacketError> {
    let width = format.payload_bits as usize;
    if width < 16 && (code as u32) >> width != 0 {
        return Err(PacketError::PayloadOverflow { code, bits: format.payload_bits });
    }
    if PrivacyCommand::from_code(code).is_none() {
        return Err(PacketError::UnknownCommand(code));
    }
    let payload = to_bits(code as u32, width);
    let crc = crc4_bits(&payload);
    let mut bits = Vec::with_capacity(format.total_bits());
    bits.extend_from_slice(&PREAMBLE);
    bits.extend_from_slice(&payload);
    bits.extend(to_bits(crc as u32, CRC_BITS));
    Ok(bits)
}

pub fn encode_with_format(command: PrivacyCommand, format: PacketFormat) -> Vec<bool> {
    encode_code(command.code() as u16, format).expect("command codes fit every supported payload width")
}

/// 18-bit packet for `command`, MSB first.
pub fn encode_packet(command: PrivacyCommand) -> Vec<bool> {
    encode_with_format(command, PacketFormat::default())
}

/// The default packet as an integer, bit 17 = first transmitted bit.
pub fn packet_word(command: PrivacyCommand) -> u32 {
    from_bits(&encode_packet(command))
}

pub fn decode_with_format(bits: &[bool], format: PacketFormat) -> Result<PrivacyCommand, PacketError> {
    let expected = format.total_bits();
    if bits.len() != expected {
        return Err(PacketError::Length { expected, got: bits.len() });
    }
    let (preamble, rest) = bits.split_at(PREAMBLE.len());
    if preamble != PREAMBLE {
        return Err(PacketError::Preamble);
    }
    let (payload, crc) = rest.split_at(format.payload_bits as usize);
    let computed = crc4_bits(payload);
    let received = from_bits(crc) as u8;
    if computed != received {
        return Err(PacketError::Crc { computed, received });
    }
    let code = from_bits(payload);
    u16::try_from(code)
        .ok()
        .and_then(PrivacyCommand::from_code)
        .ok_or(PacketError::UnknownCommand(code as u16))
}

pub fn decode_packet(bits: &[bool]) -> Result<PrivacyCommand, PacketError> {
    decode_with_format(bits, PacketFormat::default())
}
