//! Frame codec.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "SPL1"
//! 4       1     version (1)
//! 5       1     kind: 1 HELLO, 2 ACT_UP, 3 ACT_DOWN, 4 ERROR, 5 BYE
//! 6       4     body length L (u32)
//! 10      L     body
//! 10+L    4     CRC-32 (ISO-HDLC) of bytes [0, 10+L)
//! ```
//!
//! Bodies: HELLO is two u32 channel counts (activation sent up, activation
//! expected back); ACT_UP/ACT_DOWN are u32 C, H, W followed by `C*H*W` f32
//! values; ERROR is a u16 code followed by a UTF-8 message; BYE is empty.
//! All integers and floats are little-endian.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::recon::Tensor;

pub const MAGIC: [u8; 4] = *b"SPL1";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 10;
pub const CRC_LEN: usize = 4;
/// Largest accepted body, 256 MiB.
pub const MAX_BODY: usize = 256 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageKind {
    Hello = 1,
    ActUp = 2,
    ActDown = 3,
    Error = 4,
    Bye = 5,
}

impl MessageKind {
    fn from_byte(b: u8) -> Option<Self> {
        Some(match b {
            1 => MessageKind::Hello,
            2 => MessageKind::ActUp,
            3 => MessageKind::ActDown,
            4 => MessageKind::Error,
            5 => MessageKind::Bye,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCode {
    Malformed = 1,
    Shape = 2,
    Unexpected = 3,
    Internal = 4,
}

impl ErrorCode {
    fn from_u16(v: u16) -> Self {
        match v {
            1 => ErrorCode::Malformed,
            2 => ErrorCode::Shape,
            3 => ErrorCode::Unexpected,
            _ => ErrorCode::Internal,
        }
    }
}

/// Channel counts announced when a session opens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hello {
    /// Channels of the activation travelling to the provider.
    pub up_channels: u32,
    /// Channels of the activation travelling back.
    pub down_channels: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Hello(Hello),
    ActUp(Tensor<f32>),
    ActDown(Tensor<f32>),
    Error { code: ErrorCode, message: String },
    Bye,
}

impl Message {
    pub fn kind(&self) -> MessageKind {
        match self {
            Message::Hello(_) => MessageKind::Hello,
            Message::ActUp(_) => MessageKind::ActUp,
            Message::ActDown(_) => MessageKind::ActDown,
            Message::Error { .. } => MessageKind::Error,
            Message::Bye => MessageKind::Bye,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut body = Vec::new();
        match self {
            Message::Hello(h) => {
                body.extend_from_slice(&h.up_channels.to_le_bytes());
                body.extend_from_slice(&h.down_channels.to_le_bytes());
            }
            Message::ActUp(t) | Message::ActDown(t) => {
                for d in [t.channels, t.height, t.width] {
                    body.extend_from_slice(&(d as u32).to_le_bytes());
                }
                body.reserve(4 * t.data.len());
                for v in &t.data {
                    body.extend_from_slice(&v.to_le_bytes());
                }
            }
            Message::Error { code, message } => {
                body.extend_from_slice(&(*code as u16).to_le_bytes());
                body.extend_from_slice(message.as_bytes());
            }
            Message::Bye => {}
        }
        let mut frame = Vec::with_capacity(HEADER_LEN + body.len() + CRC_LEN);
        frame.extend_from_slice(&MAGIC);
        frame.push(VERSION);
        frame.push(self.kind() as u8);
        frame.extend_from_slice(&(body.len() as u32).to_le_bytes());
        frame.extend_from_slice(&body);
        let crc = crc32fast::hash(&frame);
        frame.extend_from_slice(&crc.to_le_bytes());
        frame
    }

    /// Decodes one complete frame; trailing bytes are an error.
    pub fn decode(frame: &[u8]) -> Result<Message> {
        if frame.len() < HEADER_LEN + CRC_LEN {
            return Err(Error::Frame("frame shorter than header".into()));
        }
        let header: [u8; HEADER_LEN] = frame[..HEADER_LEN].try_into().unwrap();
        let total = frame_len(&header)?;
        if frame.len() != total {
            return Err(Error::Frame(alloc::format!(
                "frame length {} does not match declared {total}",
                frame.len()
            )));
        }
        let (payload, crc) = frame.split_at(total - CRC_LEN);
        let expected = u32::from_le_bytes(crc.try_into().unwrap());
        if crc32fast::hash(payload) != expected {
            return Err(Error::Frame("CRC mismatch".into()));
        }
        let kind = MessageKind::from_byte(header[5]).unwrap();
        let body = &payload[HEADER_LEN..];
        let u32_at = |b: &[u8], i: usize| u32::from_le_bytes(b[i..i + 4].try_into().unwrap());
        match kind {
            MessageKind::Hello => {
                if body.len() != 8 {
                    return Err(Error::Frame("HELLO body must be 8 bytes".into()));
                }
                Ok(Message::Hello(Hello {
                    up_channels: u32_at(body, 0),
                    down_channels: u32_at(body, 4),
                }))
            }
            MessageKind::ActUp | MessageKind::ActDown => {
                if body.len() < 12 {
                    return Err(Error::Frame("tensor header truncated".into()));
                }
                let (c, h, w) = (u32_at(body, 0) as usize, u32_at(body, 4) as usize, u32_at(body, 8) as usize);
                let n = c
                    .checked_mul(h)
                    .and_then(|v| v.checked_mul(w))
                    .ok_or_else(|| Error::Frame("tensor size overflows".into()))?;
                if n.checked_mul(4).map(|b| b + 12) != Some(body.len()) {
                    return Err(Error::Frame("payload length disagrees with tensor header".into()));
                }
                let data = body[12..]
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                    .collect();
                let t = Tensor { channels: c, height: h, width: w, data };
                Ok(if kind == MessageKind::ActUp { Message::ActUp(t) } else { Message::ActDown(t) })
            }
            MessageKind::Error => {
                if body.len() < 2 {
                    return Err(Error::Frame("ERROR body truncated".into()));
                }
                let code = ErrorCode::from_u16(u16::from_le_bytes([body[0], body[1]]));
                let message = core::str::from_utf8(&body[2..])
                    .map_err(|_| Error::Frame("ERROR message is not UTF-8".into()))?
                    .into();
                Ok(Message::Error { code, message })
            }
            MessageKind::Bye => {
                if !body.is_empty() {
                    return Err(Error::Frame("BYE carries no body".into()));
                }
                Ok(Message::Bye)
            }
        }
    }
}

/// Validates a frame header and returns the full frame length including CRC.
pub fn frame_len(header: &[u8; HEADER_LEN]) -> Result<usize> {
    if header[..4] != MAGIC {
        return Err(Error::Frame("bad magic".into()));
    }
    if header[4] != VERSION {
        return Err(Error::Frame(alloc::format!("unsupported version {}", header[4])));
    }
    if MessageKind::from_byte(header[5]).is_none() {
        return Err(Error::Frame(alloc::format!("unknown message kind {}", header[5])));
    }
    let len = u32::from_le_bytes(header[6..10].try_into().unwrap()) as usize;
    if len > MAX_BODY {
        return Err(Error::Frame(alloc::format!("body of {len} bytes exceeds limit")));
    }
    Ok(HEADER_LEN + len + CRC_LEN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sample() -> Message {
        Message::ActUp(Tensor { channels: 2, height: 1, width: 3, data: vec![1.0, -2.5, 3.25, 0.0, 7.0, -0.125] })
    }

    #[test]
    fn header_layout_is_fixed() {
        let f = Message::Bye.encode();
        assert_eq!(&f[..4], b"SPL1");
        assert_eq!(f[4], 1);
        assert_eq!(f[5], 5);
        assert_eq!(&f[6..10], &[0, 0, 0, 0]);
        assert_eq!(f.len(), 14);
        assert_eq!(u32::from_le_bytes(f[10..14].try_into().unwrap()), crc32fast::hash(&f[..10]));
    }

    #[test]
    fn known_crc_polynomial() {
        // CRC-32/ISO-HDLC check value.
        assert_eq!(crc32fast::hash(b"123456789"), 0xCBF4_3926);
    }

    #[test]
    fn every_message_kind_round_trips() {
        let msgs = [
            Message::Hello(Hello { up_channels: 8, down_channels: 8 }),
            sample(),
            Message::ActDown(Tensor { channels: 1, height: 2, width: 2, data: vec![0.5; 4] }),
            Message::Error { code: ErrorCode::Shape, message: "expected 8 channels".into() },
            Message::Bye,
        ];
        for m in msgs {
            assert_eq!(Message::decode(&m.encode()).unwrap(), m);
        }
    }

    #[test]
    fn payload_length_must_match_header() {
        let mut f = sample().encode();
        // Claim 3 channels instead of 2 and re-seal the CRC.
        f[10] = 3;
        let n = f.len();
        let crc = crc32fast::hash(&f[..n - 4]);
        f[n - 4..].copy_from_slice(&crc.to_le_bytes());
        assert!(Message::decode(&f).is_err());
    }
}
