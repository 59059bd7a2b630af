//! Simulated wire messages and the transcript recorder.
//!
//! Binary records are `[u32 length][u8 tag][payload]`, big-endian, where the
//! length counts the payload only. Every payload opens with the round, the
//! source and the destination.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub mod tag {
    pub const DH_PUBLIC: u8 = 0x01;
    pub const MASKED_PRIME: u8 = 0x02;
    pub const SORTED_PRIMES: u8 = 0x03;
    pub const RETRY: u8 = 0x04;
    pub const COMMIT: u8 = 0x05;
    pub const REVEAL: u8 = 0x06;
    pub const TOKEN_ROWS: u8 = 0x07;
    pub const CIPHERTEXT: u8 = 0x08;
    pub const ROUTED: u8 = 0x09;
    pub const ERROR: u8 = 0x0f;
}

/// A message endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Endpoint {
    Sender(usize),
    Router,
    Receiver(usize),
    /// Every sender.
    Broadcast,
}

impl Endpoint {
    fn encode(&self, out: &mut Vec<u8>) {
        let (kind, index) = match *self {
            Endpoint::Sender(i) => (0u8, i as u32),
            Endpoint::Router => (1, 0),
            Endpoint::Receiver(j) => (2, j as u32),
            Endpoint::Broadcast => (3, 0),
        };
        out.push(kind);
        out.extend_from_slice(&index.to_be_bytes());
    }

    fn decode(r: &mut Reader) -> Result<Self> {
        let kind = r.u8()?;
        let index = r.u32()? as usize;
        match kind {
            0 => Ok(Endpoint::Sender(index)),
            1 => Ok(Endpoint::Router),
            2 => Ok(Endpoint::Receiver(index)),
            3 => Ok(Endpoint::Broadcast),
            _ => Err(Error::Malformed(format!("endpoint kind {kind}"))),
        }
    }
}

impl std::fmt::Display for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Endpoint::Sender(i) => write!(f, "sender:{i}"),
            Endpoint::Router => write!(f, "router"),
            Endpoint::Receiver(j) => write!(f, "receiver:{j}"),
            Endpoint::Broadcast => write!(f, "broadcast"),
        }
    }
}

/// Protocol messages. Integers are big-endian; group elements use their fixed encodings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message {
    DhPublic { sender: u32, value: Vec<u8> },
    MaskedPrime { sender: u32, attempt: u32, value: Vec<u8> },
    SortedPrimes { attempt: u32, primes: Vec<u64> },
    Retry { attempt: u32 },
    Commit { sender: u32, digest: [u8; 32] },
    Reveal { sender: u32, contribution: Vec<u8> },
    /// `rows` is the concatenation of `n` token rows of eight 97-byte points.
    TokenRows { sender: u32, rows: Vec<u8> },
    Ciphertext { sender: u32, epoch: u64, payload: Vec<u8> },
    Routed { epoch: u64, outputs: Vec<u32> },
    Error { text: String },
}

impl Message {
    pub fn tag(&self) -> u8 {
        match self {
            Message::DhPublic { .. } => tag::DH_PUBLIC,
            Message::MaskedPrime { .. } => tag::MASKED_PRIME,
            Message::SortedPrimes { .. } => tag::SORTED_PRIMES,
            Message::Retry { .. } => tag::RETRY,
            Message::Commit { .. } => tag::COMMIT,
            Message::Reveal { .. } => tag::REVEAL,
            Message::TokenRows { .. } => tag::TOKEN_ROWS,
            Message::Ciphertext { .. } => tag::CIPHERTEXT,
            Message::Routed { .. } => tag::ROUTED,
            Message::Error { .. } => tag::ERROR,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Message::DhPublic { .. } => "DH_PUBLIC",
            Message::MaskedPrime { .. } => "MASKED_PRIME",
            Message::SortedPrimes { .. } => "SORTED_PRIMES",
            Message::Retry { .. } => "RETRY",
            Message::Commit { .. } => "COMMIT",
            Message::Reveal { .. } => "REVEAL",
            Message::TokenRows { .. } => "TOKEN_ROWS",
            Message::Ciphertext { .. } => "CIPHERTEXT",
            Message::Routed { .. } => "ROUTED",
            Message::Error { .. } => "ERROR",
        }
    }

    fn encode_body(&self, out: &mut Vec<u8>) {
        fn bytes(out: &mut Vec<u8>, b: &[u8]) {
            out.extend_from_slice(&(b.len() as u32).to_be_bytes());
            out.extend_from_slice(b);
        }
        match self {
            Message::DhPublic { sender, value } => {
                out.extend_from_slice(&sender.to_be_bytes());
                bytes(out, value);
            }
            Message::MaskedPrime { sender, attempt, value } => {
                out.extend_from_slice(&sender.to_be_bytes());
                out.extend_from_slice(&attempt.to_be_bytes());
                bytes(out, value);
            }
            Message::SortedPrimes { attempt, primes } => {
                out.extend_from_slice(&attempt.to_be_bytes());
                out.extend_from_slice(&(primes.len() as u32).to_be_bytes());
                for p in primes {
                    out.extend_from_slice(&p.to_be_bytes());
                }
            }
            Message::Retry { attempt } => out.extend_from_slice(&attempt.to_be_bytes()),
            Message::Commit { sender, digest } => {
                out.extend_from_slice(&sender.to_be_bytes());
                out.extend_from_slice(digest);
            }
            Message::Reveal { sender, contribution } => {
                out.extend_from_slice(&sender.to_be_bytes());
                bytes(out, contribution);
            }
            Message::TokenRows { sender, rows } => {
                out.extend_from_slice(&sender.to_be_bytes());
                bytes(out, rows);
            }
            Message::Ciphertext { sender, epoch, payload } => {
                out.extend_from_slice(&sender.to_be_bytes());
                out.extend_from_slice(&epoch.to_be_bytes());
                bytes(out, payload);
            }
            Message::Routed { epoch, outputs } => {
                out.extend_from_slice(&epoch.to_be_bytes());
                out.extend_from_slice(&(outputs.len() as u32).to_be_bytes());
                for x in outputs {
                    out.extend_from_slice(&x.to_be_bytes());
                }
            }
            Message::Error { text } => bytes(out, text.as_bytes()),
        }
    }

    fn decode_body(tag: u8, r: &mut Reader) -> Result<Self> {
        Ok(match tag {
            tag::DH_PUBLIC => Message::DhPublic {
                sender: r.u32()?,
                value: r.bytes()?,
            },
            tag::MASKED_PRIME => Message::MaskedPrime {
                sender: r.u32()?,
                attempt: r.u32()?,
                value: r.bytes()?,
            },
            tag::SORTED_PRIMES => {
                let attempt = r.u32()?;
                let len = r.u32()? as usize;
                let primes = (0..len).map(|_| r.u64()).collect::<Result<_>>()?;
                Message::SortedPrimes { attempt, primes }
            }
            tag::RETRY => Message::Retry { attempt: r.u32()? },
            tag::COMMIT => Message::Commit {
                sender: r.u32()?,
                digest: r.take(32)?.try_into().expect("32 bytes"),
            },
            tag::REVEAL => Message::Reveal {
                sender: r.u32()?,
                contribution: r.bytes()?,
            },
            tag::TOKEN_ROWS => Message::TokenRows {
                sender: r.u32()?,
                rows: r.bytes()?,
            },
            tag::CIPHERTEXT => Message::Ciphertext {
                sender: r.u32()?,
                epoch: r.u64()?,
                payload: r.bytes()?,
            },
            tag::ROUTED => {
                let epoch = r.u64()?;
                let len = r.u32()? as usize;
                let outputs = (0..len).map(|_| r.u32()).collect::<Result<_>>()?;
                Message::Routed { epoch, outputs }
            }
            tag::ERROR => Message::Error {
                text: String::from_utf8(r.bytes()?).map_err(|_| Error::Malformed("error text".into()))?,
            },
            _ => return Err(Error::Malformed(format!("unknown tag {tag:#04x}"))),
        })
    }

    fn summary(&self) -> String {
        fn hex(b: &[u8]) -> String {
            b.iter().map(|x| format!("{x:02x}")).collect()
        }
        fn short(b: &[u8]) -> String {
            let d = Sha256::digest(b);
            format!("{} bytes sha256:{}", b.len(), hex(&d[..8]))
        }
        match self {
            Message::DhPublic { sender, value } => format!("sender={sender} value={}", hex(value)),
            Message::MaskedPrime { sender, attempt, value } => {
                format!("sender={sender} attempt={attempt} value={}", hex(value))
            }
            Message::SortedPrimes { attempt, primes } => format!("attempt={attempt} primes={primes:?}"),
            Message::Retry { attempt } => format!("attempt={attempt}"),
            Message::Commit { sender, digest } => format!("sender={sender} digest={}", hex(digest)),
            Message::Reveal { sender, contribution } => format!("sender={sender} c={}", hex(contribution)),
            Message::TokenRows { sender, rows } => format!("sender={sender} rows=[{}]", short(rows)),
            Message::Ciphertext { sender, epoch, payload } => {
                format!("sender={sender} epoch={epoch} ct=[{}]", short(payload))
            }
            Message::Routed { epoch, outputs } => format!("epoch={epoch} outputs={outputs:?}"),
            Message::Error { text } => format!("text={text:?}"),
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        if self.buf.len() < len {
            return Err(Error::Malformed("truncated record".into()));
        }
        let (head, rest) = self.buf.split_at(len);
        self.buf = rest;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn bytes(&mut self) -> Result<Vec<u8>> {
        let len = self.u32()? as usize;
        Ok(self.take(len)?.to_vec())
    }
}

/// One delivered message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub round: u32,
    pub from: Endpoint,
    pub to: Endpoint,
    pub message: Message,
}

impl Record {
    pub fn encode(&self, out: &mut Vec<u8>) {
        let mut payload = Vec::new();
        payload.extend_from_slice(&self.round.to_be_bytes());
        self.from.encode(&mut payload);
        self.to.encode(&mut payload);
        self.message.encode_body(&mut payload);
        out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
        out.push(self.message.tag());
        out.extend_from_slice(&payload);
    }
}

/// Ordered log of every message in a run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Transcript {
    records: Vec<Record>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, round: u32, from: Endpoint, to: Endpoint, message: Message) {
        self.records.push(Record {
            round,
            from,
            to,
            message,
        });
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for r in &self.records {
            r.encode(&mut out);
        }
        out
    }

    pub fn from_bytes(mut bytes: &[u8]) -> Result<Self> {
        let mut records = Vec::new();
        while !bytes.is_empty() {
            let mut header = Reader { buf: bytes };
            let len = header.u32()? as usize;
            let tag = header.u8()?;
            let mut body = Reader {
                buf: header.take(len)?,
            };
            bytes = header.buf;
            let round = body.u32()?;
            let from = Endpoint::decode(&mut body)?;
            let to = Endpoint::decode(&mut body)?;
            let message = Message::decode_body(tag, &mut body)?;
            if !body.buf.is_empty() {
                return Err(Error::Malformed("trailing bytes in record".into()));
            }
            records.push(Record {
                round,
                from,
                to,
                message,
            });
        }
        Ok(Transcript { records })
    }

    /// SHA-256 of the binary form.
    pub fn hash(&self) -> [u8; 32] {
        Sha256::digest(self.to_bytes()).into()
    }

    /// One line per record.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let _ = writeln!(
                out,
                "round={} {} -> {} {} {}",
                r.round,
                r.from,
                r.to,
                r.message.name(),
                r.message.summary()
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Transcript {
        let mut t = Transcript::new();
        t.push(0, Endpoint::Sender(0), Endpoint::Broadcast, Message::DhPublic { sender: 0, value: vec![1, 2] });
        t.push(1, Endpoint::Sender(1), Endpoint::Router, Message::MaskedPrime { sender: 1, attempt: 0, value: vec![9] });
        t.push(1, Endpoint::Router, Endpoint::Broadcast, Message::SortedPrimes { attempt: 0, primes: vec![2, 7] });
        t.push(1, Endpoint::Router, Endpoint::Broadcast, Message::Retry { attempt: 1 });
        t.push(2, Endpoint::Sender(0), Endpoint::Broadcast, Message::Commit { sender: 0, digest: [3; 32] });
        t.push(3, Endpoint::Sender(0), Endpoint::Broadcast, Message::Reveal { sender: 0, contribution: vec![4; 32] });
        t.push(4, Endpoint::Sender(0), Endpoint::Router, Message::TokenRows { sender: 0, rows: vec![5; 10] });
        t.push(5, Endpoint::Sender(0), Endpoint::Router, Message::Ciphertext { sender: 0, epoch: 1, payload: vec![6; 392] });
        t.push(5, Endpoint::Router, Endpoint::Receiver(1), Message::Routed { epoch: 1, outputs: vec![3, 9] });
        t.push(6, Endpoint::Router, Endpoint::Broadcast, Message::Error { text: "boom".into() });
        t
    }

    #[test]
    fn binary_round_trip() {
        let t = sample();
        let bytes = t.to_bytes();
        assert_eq!(Transcript::from_bytes(&bytes).unwrap(), t);
        assert!(Transcript::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn record_framing() {
        let mut t = Transcript::new();
        t.push(7, Endpoint::Router, Endpoint::Broadcast, Message::Retry { attempt: 2 });
        let bytes = t.to_bytes();
        // round + two endpoints + attempt
        let payload_len = 4 + 5 + 5 + 4;
        assert_eq!(bytes.len(), 5 + payload_len);
        assert_eq!(bytes[..4], (payload_len as u32).to_be_bytes());
        assert_eq!(bytes[4], tag::RETRY);
    }

    #[test]
    fn dump_has_one_line_per_record() {
        let t = sample();
        let text = t.dump();
        assert_eq!(text.lines().count(), t.len());
        assert!(text.lines().nth(2).unwrap().contains("SORTED_PRIMES attempt=0 primes=[2, 7]"));
    }

    #[test]
    fn hash_changes_with_content() {
        let a = sample();
        let mut b = sample();
        b.push(9, Endpoint::Router, Endpoint::Broadcast, Message::Retry { attempt: 3 });
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), sample().hash());
    }
}
