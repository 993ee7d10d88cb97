//! Message framing and payload codecs.
//!
//! Frame: `[u32 BE payload length][u8 tag][payload]`. Ciphertexts use the
//! fixed-width tagged encodings from [`crate::bgn`]; vectors carry a `u32`
//! element count.

use std::io::{Read, Write};
use std::sync::Arc;

use num_bigint::BigUint;

use super::{ProtocolError, Variant};
use crate::bgn::{CiphertextG, CiphertextG1, PublicKey};
use crate::pairing::{GroupParams, PairingGroup};
use crate::prp::PermSeed;

/// Upper bound on a single frame, to reject garbage lengths early.
pub const MAX_FRAME: usize = 1 << 31;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Tag {
    SetupPk = 1,
    SetupSkToPs = 2,
    UploadT = 3,
    UploadTp = 4,
    Trapdoor = 5,
    ScoresI = 6,
    RowI = 7,
    ScoresII = 8,
    DegreeII = 9,
    SortedII = 10,
    ScoresIII = 11,
    GcBlob = 12,
    Ot1 = 13,
    Ot2 = 14,
    Ot3 = 15,
    Result = 16,
    Error = 17,
}

impl Tag {
    pub const ALL: [Tag; 17] = [
        Tag::SetupPk,
        Tag::SetupSkToPs,
        Tag::UploadT,
        Tag::UploadTp,
        Tag::Trapdoor,
        Tag::ScoresI,
        Tag::RowI,
        Tag::ScoresII,
        Tag::DegreeII,
        Tag::SortedII,
        Tag::ScoresIII,
        Tag::GcBlob,
        Tag::Ot1,
        Tag::Ot2,
        Tag::Ot3,
        Tag::Result,
        Tag::Error,
    ];

    pub fn from_u8(b: u8) -> Option<Tag> {
        Tag::ALL.get((b as usize).wrapping_sub(1)).copied()
    }

    pub fn name(&self) -> &'static str {
        match self {
            Tag::SetupPk => "SETUP_PK",
            Tag::SetupSkToPs => "SETUP_SK_TO_PS",
            Tag::UploadT => "UPLOAD_T",
            Tag::UploadTp => "UPLOAD_TP",
            Tag::Trapdoor => "TRAPDOOR",
            Tag::ScoresI => "SCORES_I",
            Tag::RowI => "ROW_I",
            Tag::ScoresII => "SCORES_II",
            Tag::DegreeII => "DEGREE_II",
            Tag::SortedII => "SORTED_II",
            Tag::ScoresIII => "SCORES_III",
            Tag::GcBlob => "GC_BLOB",
            Tag::Ot1 => "OT1",
            Tag::Ot2 => "OT2",
            Tag::Ot3 => "OT3",
            Tag::Result => "RESULT",
            Tag::Error => "ERROR",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    pub tag: Tag,
    pub payload: Vec<u8>,
}

impl Message {
    pub fn new(tag: Tag, payload: Vec<u8>) -> Self {
        Self { tag, payload }
    }

    pub fn error(msg: &str) -> Self {
        Self::new(Tag::Error, msg.as_bytes().to_vec())
    }

    /// Bytes on the wire, including the 5-byte header.
    pub fn frame_len(&self) -> usize {
        5 + self.payload.len()
    }

    pub fn to_frame(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.frame_len());
        out.extend((self.payload.len() as u32).to_be_bytes());
        out.push(self.tag as u8);
        out.extend(&self.payload);
        out
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(&(self.payload.len() as u32).to_be_bytes())?;
        w.write_all(&[self.tag as u8])?;
        w.write_all(&self.payload)?;
        w.flush()
    }

    /// Reads one frame; `Ok(None)` on clean end of stream.
    pub fn read_from<R: Read>(r: &mut R) -> Result<Option<Message>, ProtocolError> {
        let mut head = [0u8; 5];
        let mut got = 0;
        while got < 5 {
            let k = r
                .read(&mut head[got..])
                .map_err(|e| ProtocolError::Transport(e.to_string()))?;
            if k == 0 {
                return if got == 0 {
                    Ok(None)
                } else {
                    Err(ProtocolError::Malformed("truncated frame header".into()))
                };
            }
            got += k;
        }
        let len = u32::from_be_bytes(head[..4].try_into().unwrap()) as usize;
        if len > MAX_FRAME {
            return Err(ProtocolError::Malformed(format!("frame of {len} bytes")));
        }
        let tag = Tag::from_u8(head[4])
            .ok_or_else(|| ProtocolError::Malformed(format!("unknown tag {}", head[4])))?;
        let mut payload = vec![0u8; len];
        r.read_exact(&mut payload)
            .map_err(|e| ProtocolError::Transport(e.to_string()))?;
        Ok(Some(Message { tag, payload }))
    }

    pub fn from_frame(bytes: &[u8]) -> Result<Message, ProtocolError> {
        let mut cur = bytes;
        let m = Self::read_from(&mut cur)?
            .ok_or_else(|| ProtocolError::Malformed("empty frame".into()))?;
        if !cur.is_empty() {
            return Err(ProtocolError::Malformed(
                "trailing bytes after frame".into(),
            ));
        }
        Ok(m)
    }
}

// ---------------------------------------------------------------- primitives

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8], ProtocolError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| ProtocolError::Malformed("payload truncated".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub(crate) fn u8(&mut self) -> Result<u8, ProtocolError> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16, ProtocolError> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self) -> Result<u32, ProtocolError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64, ProtocolError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn big(&mut self) -> Result<BigUint, ProtocolError> {
        let n = self.u16()? as usize;
        Ok(BigUint::from_bytes_be(self.take(n)?))
    }

    /// `u32` count followed by that many fixed-width items; the count is
    /// checked against the remaining bytes before allocating.
    pub(crate) fn count(&mut self, item: usize) -> Result<usize, ProtocolError> {
        let n = self.u32()? as usize;
        if n.checked_mul(item)
            .is_none_or(|b| b > self.buf.len() - self.pos)
        {
            return Err(ProtocolError::Malformed(
                "element count exceeds payload".into(),
            ));
        }
        Ok(n)
    }

    pub(crate) fn finish(self) -> Result<(), ProtocolError> {
        if self.pos != self.buf.len() {
            return Err(ProtocolError::Malformed("trailing payload bytes".into()));
        }
        Ok(())
    }
}

fn put_big(out: &mut Vec<u8>, x: &BigUint) {
    let b = x.to_bytes_be();
    out.extend((b.len() as u16).to_be_bytes());
    out.extend(b);
}

// ---------------------------------------------------------------- ciphertext vectors

pub fn encode_g_vec(pk: &PublicKey, cts: &[CiphertextG]) -> Vec<u8> {
    let w = pk.ct_g_len();
    let mut out = vec![0u8; 4 + w * cts.len()];
    out[..4].copy_from_slice(&(cts.len() as u32).to_be_bytes());
    for (c, slot) in cts.iter().zip(out[4..].chunks_mut(w)) {
        pk.write_ct_g(c, slot);
    }
    out
}

pub fn encode_g1_vec(pk: &PublicKey, cts: &[CiphertextG1]) -> Vec<u8> {
    let w = pk.ct_g1_len();
    let mut out = vec![0u8; 4 + w * cts.len()];
    out[..4].copy_from_slice(&(cts.len() as u32).to_be_bytes());
    for (c, slot) in cts.iter().zip(out[4..].chunks_mut(w)) {
        pk.write_ct_g1(c, slot);
    }
    out
}

pub(crate) fn read_g_vec(
    pk: &PublicKey,
    r: &mut Reader,
) -> Result<Vec<CiphertextG>, ProtocolError> {
    use rayon::prelude::*;
    let w = pk.ct_g_len();
    let n = r.count(w)?;
    let raw = r.take(n * w)?;
    raw.par_chunks(w)
        .map(|c| pk.decode_ct_g(c).map_err(ProtocolError::from))
        .collect()
}

pub(crate) fn read_g1_vec(
    pk: &PublicKey,
    r: &mut Reader,
) -> Result<Vec<CiphertextG1>, ProtocolError> {
    use rayon::prelude::*;
    let w = pk.ct_g1_len();
    let n = r.count(w)?;
    let raw = r.take(n * w)?;
    raw.par_chunks(w)
        .map(|c| pk.decode_ct_g1(c).map_err(ProtocolError::from))
        .collect()
}

pub fn decode_g_vec(pk: &PublicKey, payload: &[u8]) -> Result<Vec<CiphertextG>, ProtocolError> {
    let mut r = Reader::new(payload);
    let v = read_g_vec(pk, &mut r)?;
    r.finish()?;
    Ok(v)
}

pub fn decode_g1_vec(pk: &PublicKey, payload: &[u8]) -> Result<Vec<CiphertextG1>, ProtocolError> {
    let mut r = Reader::new(payload);
    let v = read_g1_vec(pk, &mut r)?;
    r.finish()?;
    Ok(v)
}

// ---------------------------------------------------------------- setup

/// Session parameters announced with the public key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SessionInfo {
    pub variant: Variant,
    /// Largest graph order that will be uploaded; sizes the dlog tables.
    pub n_max: u32,
    pub r_max: u64,
}

pub fn encode_setup_pk(pk: &PublicKey, info: &SessionInfo) -> Vec<u8> {
    let group = pk.group();
    let params = group.params();
    let mut out = Vec::new();
    put_big(&mut out, &params.p);
    put_big(&mut out, &params.n);
    put_big(&mut out, &params.l);
    out.extend(group.encode_g(pk.g()));
    out.extend(group.encode_g(pk.h()));
    out.push(info.variant as u8);
    out.extend(info.n_max.to_be_bytes());
    out.extend(info.r_max.to_be_bytes());
    out
}

pub fn decode_setup_pk(payload: &[u8]) -> Result<(PublicKey, SessionInfo), ProtocolError> {
    let mut r = Reader::new(payload);
    let params = GroupParams {
        p: r.big()?,
        n: r.big()?,
        l: r.big()?,
    };
    let group = Arc::new(PairingGroup::new(&params).map_err(crate::bgn::BgnError::from)?);
    let g = group
        .decode_g(r.take(group.g_len())?)
        .map_err(crate::bgn::BgnError::from)?;
    let h = group
        .decode_g(r.take(group.g_len())?)
        .map_err(crate::bgn::BgnError::from)?;
    let variant = Variant::from_u8(r.u8()?)?;
    let n_max = r.u32()?;
    let r_max = r.u64()?;
    r.finish()?;
    if r_max == 0 {
        return Err(ProtocolError::Malformed(
            "mask bound must be positive".into(),
        ));
    }
    Ok((
        PublicKey::new(group, g, h)?,
        SessionInfo {
            variant,
            n_max,
            r_max,
        },
    ))
}

pub fn encode_setup_sk(q1: &BigUint) -> Vec<u8> {
    let mut out = Vec::new();
    put_big(&mut out, q1);
    out
}

pub fn decode_setup_sk(payload: &[u8]) -> Result<BigUint, ProtocolError> {
    let mut r = Reader::new(payload);
    let q1 = r.big()?;
    r.finish()?;
    Ok(q1)
}

// ---------------------------------------------------------------- trapdoor

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum QueryKind {
    LinkPrediction = 0,
    Neighbor = 1,
    Degree = 2,
    Adjacency = 3,
    TopK = 4,
}

impl QueryKind {
    fn from_u8(b: u8) -> Result<Self, ProtocolError> {
        Ok(match b {
            0 => Self::LinkPrediction,
            1 => Self::Neighbor,
            2 => Self::Degree,
            3 => Self::Adjacency,
            4 => Self::TopK,
            _ => return Err(ProtocolError::Malformed(format!("unknown query kind {b}"))),
        })
    }
}

/// `τ_v = (i', s)` plus the query kind and one argument (`k` for top-k,
/// the second row for adjacency).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Trapdoor {
    pub kind: QueryKind,
    pub row: u32,
    pub seed: PermSeed,
    pub arg: u32,
}

impl Trapdoor {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = vec![self.kind as u8];
        out.extend(self.row.to_be_bytes());
        out.extend(self.seed);
        out.extend(self.arg.to_be_bytes());
        out
    }

    pub fn decode(payload: &[u8]) -> Result<Self, ProtocolError> {
        let mut r = Reader::new(payload);
        let kind = QueryKind::from_u8(r.u8()?)?;
        let row = r.u32()?;
        let seed = r.take(32)?.try_into().unwrap();
        let arg = r.u32()?;
        r.finish()?;
        Ok(Self {
            kind,
            row,
            seed,
            arg,
        })
    }
}

// ---------------------------------------------------------------- results

pub const RESULT_INDICES: u8 = 0;
pub const RESULT_BITS: u8 = 1;
pub const RESULT_CIPHERTEXT: u8 = 2;

pub fn encode_indices(idx: &[u32]) -> Vec<u8> {
    let mut out = vec![RESULT_INDICES];
    out.extend((idx.len() as u32).to_be_bytes());
    for i in idx {
        out.extend(i.to_be_bytes());
    }
    out
}

pub fn encode_bits(bits: &[bool]) -> Vec<u8> {
    let mut out = vec![RESULT_BITS];
    out.extend((bits.len() as u32).to_be_bytes());
    out.extend(bits.iter().map(|&b| b as u8));
    out
}

pub fn encode_ct_result(pk: &PublicKey, c: &CiphertextG) -> Vec<u8> {
    let mut out = vec![RESULT_CIPHERTEXT; 1 + pk.ct_g_len()];
    pk.write_ct_g(c, &mut out[1..]);
    out
}

pub fn decode_indices(payload: &[u8]) -> Result<Vec<u32>, ProtocolError> {
    let mut r = Reader::new(payload);
    if r.u8()? != RESULT_INDICES {
        return Err(ProtocolError::Malformed("expected an index result".into()));
    }
    let n = r.count(4)?;
    let v = (0..n).map(|_| r.u32()).collect::<Result<_, _>>()?;
    r.finish()?;
    Ok(v)
}

pub fn decode_bits(payload: &[u8]) -> Result<Vec<bool>, ProtocolError> {
    let mut r = Reader::new(payload);
    if r.u8()? != RESULT_BITS {
        return Err(ProtocolError::Malformed("expected a bit-row result".into()));
    }
    let n = r.count(1)?;
    let v = r
        .take(n)?
        .iter()
        .map(|&b| match b {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(ProtocolError::Malformed("bit value not 0/1".into())),
        })
        .collect::<Result<_, _>>()?;
    r.finish()?;
    Ok(v)
}

pub fn decode_ct_result(pk: &PublicKey, payload: &[u8]) -> Result<CiphertextG, ProtocolError> {
    match payload.split_first() {
        Some((&RESULT_CIPHERTEXT, rest)) if rest.len() == pk.ct_g_len() => {
            Ok(pk.decode_ct_g(rest)?)
        }
        _ => Err(ProtocolError::Malformed(
            "expected a ciphertext result".into(),
        )),
    }
}

/// `(masked score, PS-visible index)` pairs, non-increasing by score.
pub fn encode_sorted(list: &[(u32, u32)]) -> Vec<u8> {
    let mut out = (list.len() as u32).to_be_bytes().to_vec();
    for (s, i) in list {
        out.extend(s.to_be_bytes());
        out.extend(i.to_be_bytes());
    }
    out
}

pub fn decode_sorted(payload: &[u8]) -> Result<Vec<(u32, u32)>, ProtocolError> {
    let mut r = Reader::new(payload);
    let n = r.count(8)?;
    let v = (0..n)
        .map(|_| Ok((r.u32()?, r.u32()?)))
        .collect::<Result<_, ProtocolError>>()?;
    r.finish()?;
    Ok(v)
}

/// Score vector with a leading `k` (0 for a plain link-prediction query).
pub fn encode_scores(pk: &PublicKey, k: u32, cts: &[CiphertextG1]) -> Vec<u8> {
    let mut out = k.to_be_bytes().to_vec();
    out.extend(encode_g1_vec(pk, cts));
    out
}

pub fn decode_scores(
    pk: &PublicKey,
    payload: &[u8],
) -> Result<(u32, Vec<CiphertextG1>), ProtocolError> {
    let mut r = Reader::new(payload);
    let k = r.u32()?;
    let v = read_g1_vec(pk, &mut r)?;
    r.finish()?;
    Ok((k, v))
}

pub fn encode_scores_iii(pk: &PublicKey, c: &[CiphertextG1], m: &[CiphertextG]) -> Vec<u8> {
    let mut out = encode_g1_vec(pk, c);
    out.extend(encode_g_vec(pk, m));
    out
}

pub fn decode_scores_iii(
    pk: &PublicKey,
    payload: &[u8],
) -> Result<(Vec<CiphertextG1>, Vec<CiphertextG>), ProtocolError> {
    let mut r = Reader::new(payload);
    let c = read_g1_vec(pk, &mut r)?;
    let m = read_g_vec(pk, &mut r)?;
    r.finish()?;
    Ok((c, m))
}

/// Upload of an `n × n` matrix: `u32 n` then `n²` ciphertexts row-major.
pub fn encode_upload_t(pk: &PublicKey, n: usize, t: &[CiphertextG]) -> Vec<u8> {
    let mut out = (n as u32).to_be_bytes().to_vec();
    out.extend(encode_g_vec(pk, t));
    out
}

pub fn decode_upload_t(
    pk: &PublicKey,
    payload: &[u8],
) -> Result<(usize, Vec<CiphertextG>), ProtocolError> {
    let mut r = Reader::new(payload);
    let n = r.u32()? as usize;
    let t = read_g_vec(pk, &mut r)?;
    r.finish()?;
    if t.len() != n * n {
        return Err(ProtocolError::Malformed(
            "matrix size does not match header".into(),
        ));
    }
    Ok((n, t))
}

pub fn encode_upload_tp(pk: &PublicKey, n: usize, t: &[CiphertextG1]) -> Vec<u8> {
    let mut out = (n as u32).to_be_bytes().to_vec();
    out.extend(encode_g1_vec(pk, t));
    out
}

pub fn decode_upload_tp(
    pk: &PublicKey,
    payload: &[u8],
) -> Result<(usize, Vec<CiphertextG1>), ProtocolError> {
    let mut r = Reader::new(payload);
    let n = r.u32()? as usize;
    let t = read_g1_vec(pk, &mut r)?;
    r.finish()?;
    if t.len() != n * n {
        return Err(ProtocolError::Malformed(
            "matrix size does not match header".into(),
        ));
    }
    Ok((n, t))
}
