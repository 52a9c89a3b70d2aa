//! Wire messages and protocol transcripts.
//!
//! A message is `session_id(16) || step(1) || length(4, big-endian) || body`.
//! A transcript file is the sequence of framed messages followed by one
//! status byte: zero for a completed run, otherwise the abort code.

use crate::encoding::{DecodeError, Decoder, Encoder};

use super::AbortCode;

/// Bodies above this size are refused before allocation.
pub const MAX_BODY_LEN: usize = 1 << 20;

/// Header length: session id, step byte and body length.
pub const HEADER_LEN: usize = 16 + 1 + 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Step {
    LoginClaim = 0x10,
    LoginChallenge = 0x11,
    LoginResponse = 0x12,
    LoginAccept = 0x13,
    DelegateClaim = 0x20,
    DelegateChallenge = 0x21,
    DelegateResponse = 0x22,
    DelegateSubmit = 0x23,
    DelegateTransfer = 0x24,
    MutualClaim = 0x30,
    MutualChallenge = 0x31,
    MutualResponse = 0x32,
    MutualKeyShare = 0x33,
    Abort = 0x7f,
}

impl Step {
    pub fn from_byte(b: u8) -> Option<Self> {
        use Step::*;
        Some(match b {
            0x10 => LoginClaim,
            0x11 => LoginChallenge,
            0x12 => LoginResponse,
            0x13 => LoginAccept,
            0x20 => DelegateClaim,
            0x21 => DelegateChallenge,
            0x22 => DelegateResponse,
            0x23 => DelegateSubmit,
            0x24 => DelegateTransfer,
            0x30 => MutualClaim,
            0x31 => MutualChallenge,
            0x32 => MutualResponse,
            0x33 => MutualKeyShare,
            0x7f => Abort,
            _ => return None,
        })
    }

    /// Whether the session initiator sends this step. Aborts may come from
    /// either side and carry their sender in the body.
    pub fn from_initiator(self) -> bool {
        use Step::*;
        matches!(
            self,
            LoginClaim | LoginResponse | DelegateClaim | DelegateResponse | DelegateSubmit | MutualClaim | MutualResponse
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    pub session_id: [u8; 16],
    pub step: Step,
    pub body: Vec<u8>,
}

impl Message {
    pub fn new(session_id: [u8; 16], step: Step, body: Vec<u8>) -> Self {
        Message { session_id, step, body }
    }

    pub fn abort(session_id: [u8; 16], code: AbortCode, from_initiator: bool) -> Self {
        Message::new(session_id, Step::Abort, vec![code as u8, from_initiator as u8])
    }

    /// `(code, sent by initiator)` of an abort message.
    pub fn abort_info(&self) -> Option<(AbortCode, bool)> {
        match (self.step, self.body.as_slice()) {
            (Step::Abort, [code, who]) => Some((AbortCode::from_byte(*code)?, *who != 0)),
            _ => None,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        Encoder::new()
            .fixed(&self.session_id)
            .u8(self.step as u8)
            .bytes(&self.body)
            .finish()
    }

    pub fn decode(d: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let session_id = d.array()?;
        let step = Step::from_byte(d.u8()?).ok_or(DecodeError::InvalidField("step"))?;
        let len = d.u32()? as usize;
        if len > MAX_BODY_LEN {
            return Err(DecodeError::InvalidField("body length"));
        }
        let body = d.fixed(len)?.to_vec();
        Ok(Message { session_id, step, body })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut d = Decoder::new(bytes);
        let m = Self::decode(&mut d)?;
        d.finish()?;
        Ok(m)
    }

    /// Body length announced by a header, validated against the limit.
    pub fn body_len_from_header(header: &[u8; HEADER_LEN]) -> Result<usize, DecodeError> {
        Step::from_byte(header[16]).ok_or(DecodeError::InvalidField("step"))?;
        let len = u32::from_be_bytes(header[17..21].try_into().expect("four bytes")) as usize;
        if len > MAX_BODY_LEN {
            return Err(DecodeError::InvalidField("body length"));
        }
        Ok(len)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TranscriptStatus {
    Completed,
    Aborted(AbortCode),
}

/// Every message of one protocol run, in order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolTranscript {
    pub messages: Vec<Message>,
    pub status: TranscriptStatus,
}

impl ProtocolTranscript {
    pub fn is_completed(&self) -> bool {
        self.status == TranscriptStatus::Completed
    }

    /// The first message with the given step.
    pub fn find(&self, step: Step) -> Option<&Message> {
        self.messages.iter().find(|m| m.step == step)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for m in &self.messages {
            out.extend(m.to_bytes());
        }
        out.push(match self.status {
            TranscriptStatus::Completed => 0,
            TranscriptStatus::Aborted(code) => code as u8,
        });
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut d = Decoder::new(bytes);
        let mut messages = Vec::new();
        while d.remaining() > 1 {
            messages.push(Message::decode(&mut d)?);
        }
        let status = match d.u8()? {
            0 => TranscriptStatus::Completed,
            c => TranscriptStatus::Aborted(AbortCode::from_byte(c).ok_or(DecodeError::InvalidField("status"))?),
        };
        d.finish()?;
        Ok(ProtocolTranscript { messages, status })
    }
}
