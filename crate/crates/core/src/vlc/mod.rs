//! Optical beacon channel: packet coding, torso search regions, blob
//! extraction and path decoding.

pub mod blob;
pub mod codec;
pub mod decoder;
pub mod region;

pub use blob::{detect_blobs, rasterize_blob, Blob, LuminanceBlob, LuminanceField};
pub use codec::{decode_packet, encode_packet, PacketFormat};
pub use decoder::{step_decoder, try_resolve, Resolution, VlcConfig, VlcDecoder, ViterbiPath};
pub use region::{search_region_for_face, SearchRegion};
