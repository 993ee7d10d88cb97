//! On-disk encrypted graph: `SLPE`, variant byte, then the upload frames.

use std::io::{Read, Write};

use anyhow::{bail, Context, Result};
use slp_core::bgn::PublicKey;
use slp_core::protocol::client::EncryptedGraph;
use slp_core::protocol::{wire, Message, Tag, Variant};

const MAGIC: &[u8; 4] = b"SLPE";

pub fn write_encrypted<W: Write>(
    mut w: W,
    pk: &PublicKey,
    variant: Variant,
    enc: &EncryptedGraph,
) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[variant as u8])?;
    Message::new(Tag::UploadT, wire::encode_upload_t(pk, enc.n, &enc.t)).write_to(&mut w)?;
    if let Some(tp) = &enc.tp {
        Message::new(Tag::UploadTp, wire::encode_upload_tp(pk, enc.n, tp)).write_to(&mut w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_encrypted<R: Read>(mut r: R, pk: &PublicKey) -> Result<(Variant, EncryptedGraph)> {
    let mut head = [0u8; 5];
    r.read_exact(&mut head).context("reading header")?;
    if &head[..4] != MAGIC {
        bail!("not an encrypted graph file");
    }
    let variant =
        Variant::from_u8(head[4]).with_context(|| format!("unknown variant {}", head[4]))?;
    let m = Message::read_from(&mut r)?.context("missing matrix")?;
    if m.tag != Tag::UploadT {
        bail!("expected the T matrix, found {}", m.tag.name());
    }
    let (n, t) = wire::decode_upload_t(pk, &m.payload)?;
    let tp = match Message::read_from(&mut r)? {
        Some(m) if m.tag == Tag::UploadTp => {
            let (n2, tp) = wire::decode_upload_tp(pk, &m.payload)?;
            if n2 != n {
                bail!("matrix sizes disagree: {n} vs {n2}");
            }
            Some(tp)
        }
        Some(m) => bail!("unexpected {} frame", m.tag.name()),
        None => None,
    };
    if (variant == Variant::II) != tp.is_some() {
        bail!("{variant} file with mismatched masked matrix");
    }
    Ok((variant, EncryptedGraph { n, t, tp }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use slp_core::graph::Graph;
    use slp_core::protocol::client::encrypt_graph;
    use slp_core::protocol::ClientKeys;

    #[test]
    fn round_trip_each_variant() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let keys = ClientKeys::generate(24, &mut rng).unwrap();
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]);
        for v in [Variant::I, Variant::II, Variant::III] {
            let enc = encrypt_graph(&g, &keys, v, &mut rng).unwrap();
            let mut buf = Vec::new();
            write_encrypted(&mut buf, keys.pk(), v, &enc).unwrap();
            let (v2, back) = read_encrypted(&buf[..], keys.pk()).unwrap();
            assert_eq!(v2, v);
            assert_eq!(back.n, 4);
            assert!(back.t == enc.t);
            assert_eq!(back.tp.is_some(), v == Variant::II);
        }
        assert!(read_encrypted(&b"XXXX\x01"[..], keys.pk()).is_err());
    }
}
