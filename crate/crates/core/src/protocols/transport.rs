//! Message transports and the session driver.

use std::io::{self, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::str::FromStr;
use std::sync::mpsc::{channel, Receiver, Sender};

use super::message::{Message, ProtocolTranscript, TranscriptStatus, HEADER_LEN};
use super::{AbortCode, Party};

pub trait Transport {
    fn send(&mut self, msg: &Message) -> io::Result<()>;
    fn recv(&mut self) -> io::Result<Message>;
}

fn invalid(e: impl std::fmt::Display) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, e.to_string())
}

/// In-process endpoint. Messages cross as framed bytes so the codec is
/// exercised exactly as on a socket.
pub struct Loopback {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
}

pub fn loopback_pair() -> (Loopback, Loopback) {
    let (a_tx, b_rx) = channel();
    let (b_tx, a_rx) = channel();
    (Loopback { tx: a_tx, rx: a_rx }, Loopback { tx: b_tx, rx: b_rx })
}

impl Transport for Loopback {
    fn send(&mut self, msg: &Message) -> io::Result<()> {
        self.tx
            .send(msg.to_bytes())
            .map_err(|_| io::Error::new(io::ErrorKind::BrokenPipe, "peer dropped"))
    }

    fn recv(&mut self) -> io::Result<Message> {
        let bytes = self
            .rx
            .recv()
            .map_err(|_| io::Error::new(io::ErrorKind::UnexpectedEof, "peer dropped"))?;
        Message::from_bytes(&bytes).map_err(invalid)
    }
}

/// Length-prefixed framing over a TCP stream.
pub struct Tcp {
    stream: TcpStream,
}

impl Tcp {
    pub fn new(stream: TcpStream) -> io::Result<Self> {
        stream.set_nodelay(true)?;
        Ok(Tcp { stream })
    }
}

impl Transport for Tcp {
    fn send(&mut self, msg: &Message) -> io::Result<()> {
        self.stream.write_all(&msg.to_bytes())?;
        self.stream.flush()
    }

    fn recv(&mut self) -> io::Result<Message> {
        let mut header = [0u8; HEADER_LEN];
        self.stream.read_exact(&mut header)?;
        let len = Message::body_len_from_header(&header).map_err(invalid)?;
        let mut frame = header.to_vec();
        frame.resize(HEADER_LEN + len, 0);
        self.stream.read_exact(&mut frame[HEADER_LEN..])?;
        Message::from_bytes(&frame).map_err(invalid)
    }
}

/// Two connected endpoints over a fresh listener on `addr`.
pub fn tcp_pair(addr: &str) -> io::Result<(Tcp, Tcp)> {
    let listener = TcpListener::bind(addr)?;
    let client = TcpStream::connect(listener.local_addr()?)?;
    let (server, _) = listener.accept()?;
    Ok((Tcp::new(client)?, Tcp::new(server)?))
}

/// Transport selection as given on the command line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TransportKind {
    Loopback,
    Tcp(String),
}

impl TransportKind {
    pub fn connect(&self) -> io::Result<(Box<dyn Transport>, Box<dyn Transport>)> {
        Ok(match self {
            TransportKind::Loopback => {
                let (a, b) = loopback_pair();
                (Box::new(a), Box::new(b))
            }
            TransportKind::Tcp(addr) => {
                let (a, b) = tcp_pair(addr)?;
                (Box::new(a), Box::new(b))
            }
        })
    }
}

impl FromStr for TransportKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "loopback" => Ok(TransportKind::Loopback),
            _ => match s.strip_prefix("tcp:") {
                Some(addr) if !addr.is_empty() => Ok(TransportKind::Tcp(addr.to_string())),
                _ => Err(format!("unknown transport {s:?}; expected loopback or tcp:<addr>")),
            },
        }
    }
}

/// Runs one session between `initiator` and `responder` over a connected
/// endpoint pair, recording every message.
///
/// The parties alternate strictly, so both ends can be driven from one
/// thread even over a socket. A party that aborts sends an abort message;
/// the run then stops with that code.
pub fn run_session(
    initiator: &mut dyn Party,
    responder: &mut dyn Party,
    initiator_end: &mut dyn Transport,
    responder_end: &mut dyn Transport,
) -> io::Result<ProtocolTranscript> {
    let mut messages = Vec::new();
    let first = match initiator.start() {
        Ok(m) => m,
        Err(code) => {
            return Ok(ProtocolTranscript {
                messages,
                status: TranscriptStatus::Aborted(code),
            })
        }
    };
    let mut outgoing = first;
    let mut from_initiator = true;
    loop {
        let (tx, rx): (&mut dyn Transport, &mut dyn Transport) = if from_initiator {
            (&mut *initiator_end, &mut *responder_end)
        } else {
            (&mut *responder_end, &mut *initiator_end)
        };
        tx.send(&outgoing)?;
        let received = rx.recv()?;
        messages.push(received.clone());
        if let Some((code, _)) = received.abort_info() {
            return Ok(ProtocolTranscript {
                messages,
                status: TranscriptStatus::Aborted(code),
            });
        }
        let receiver: &mut dyn Party = if from_initiator { &mut *responder } else { &mut *initiator };
        let session_id = received.session_id;
        match receiver.handle(&received) {
            Ok(Some(reply)) => {
                outgoing = reply;
                from_initiator = !from_initiator;
            }
            Ok(None) => {
                return Ok(ProtocolTranscript {
                    messages,
                    status: TranscriptStatus::Completed,
                })
            }
            Err(code) => {
                outgoing = Message::abort(session_id, code, !from_initiator);
                from_initiator = !from_initiator;
                let (tx, rx): (&mut dyn Transport, &mut dyn Transport) = if from_initiator {
                    (&mut *initiator_end, &mut *responder_end)
                } else {
                    (&mut *responder_end, &mut *initiator_end)
                };
                tx.send(&outgoing)?;
                messages.push(rx.recv()?);
                return Ok(ProtocolTranscript {
                    messages,
                    status: TranscriptStatus::Aborted(code),
                });
            }
        }
    }
}

/// Connects a fresh endpoint pair of the given kind and runs one session.
pub fn run_over(
    kind: &TransportKind,
    initiator: &mut dyn Party,
    responder: &mut dyn Party,
) -> io::Result<ProtocolTranscript> {
    let (mut a, mut b) = kind.connect()?;
    run_session(initiator, responder, a.as_mut(), b.as_mut())
}

/// Abort code carried by a transcript, if the run did not complete.
pub fn abort_code(t: &ProtocolTranscript) -> Option<AbortCode> {
    match t.status {
        TranscriptStatus::Completed => None,
        TranscriptStatus::Aborted(c) => Some(c),
    }
}
