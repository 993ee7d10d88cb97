//! Message-driven party loops over an abstract [`Transport`].
//!
//! Flows (sender → receiver: tags):
//! - setup: C → CS `SETUP_PK`; C → PS `SETUP_PK`, `SETUP_SK_TO_PS`
//! - upload: C → CS `UPLOAD_T` (and `UPLOAD_TP` for SLP-II)
//! - SLP-I / top-k: C → CS `TRAPDOOR`; CS → PS `SCORES_I`, `ROW_I`; PS → C `RESULT`
//! - SLP-II: C → CS `TRAPDOOR`; CS → C `DEGREE_II`; CS → PS `SCORES_II`; PS → C `SORTED_II`
//! - SLP-III: C → CS `TRAPDOOR`; CS → PS `SCORES_III`, `GC_BLOB`, `OT1`;
//!   PS → CS `OT2`; CS → PS `OT3`; PS → C `RESULT`
//! - neighbours: C → CS `TRAPDOOR`; CS → PS `ROW_I`; PS → C `RESULT`
//! - degree, adjacency: C → CS `TRAPDOOR`; CS → C `RESULT`
//!
//! A failing computation is reported with `ERROR` to whichever party the
//! client is waiting on; the PS relays errors it receives from the CS.

use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::{Arc, Mutex};

use rand::{CryptoRng, RngCore};

use super::client::{self, ClientKeys, Resolver};
use super::cs::{CloudServer, CsOptions};
use super::ps::ProxyServer;
use super::wire::{self, Message, QueryKind, SessionInfo, Tag, Trapdoor};
use super::{ProtocolError, Variant};
use crate::bgn::{PublicKey, SolverG};
use crate::gc::{GarbledCircuit, Label};
use crate::graph::Graph;
use crate::ot::{Ot1, Ot2, Ot3, OtReceiver, OtSender};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Client,
    Cs,
    Ps,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Client, Role::Cs, Role::Ps];

    pub fn name(&self) -> &'static str {
        match self {
            Role::Client => "client",
            Role::Cs => "cs",
            Role::Ps => "ps",
        }
    }

    pub fn parse(s: &str) -> Option<Role> {
        match s.to_ascii_lowercase().as_str() {
            "client" | "c" => Some(Role::Client),
            "cs" | "cloud" => Some(Role::Cs),
            "ps" | "proxy" => Some(Role::Ps),
            _ => None,
        }
    }
}

/// Ordered, reliable point-to-point channels to the two other parties.
pub trait Transport {
    fn send(&mut self, to: Role, msg: Message) -> Result<(), ProtocolError>;
    /// Next message from `from`; `Ok(None)` once that peer has closed.
    fn recv(&mut self, from: Role) -> Result<Option<Message>, ProtocolError>;
}

/// One logged frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrafficEntry {
    pub from: Role,
    pub to: Role,
    pub tag: Tag,
    pub bytes: usize,
}

/// Shared append-only record of frames sent.
#[derive(Clone, Debug, Default)]
pub struct TrafficLog(Arc<Mutex<Vec<TrafficEntry>>>);

impl TrafficLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, e: TrafficEntry) {
        self.0.lock().expect("traffic log poisoned").push(e);
    }

    pub fn entries(&self) -> Vec<TrafficEntry> {
        self.0.lock().expect("traffic log poisoned").clone()
    }

    pub fn clear(&self) {
        self.0.lock().expect("traffic log poisoned").clear();
    }

    /// Total frame bytes matching the filter.
    pub fn bytes(&self, from: Role, to: Role, tag: Option<Tag>) -> usize {
        self.entries()
            .iter()
            .filter(|e| e.from == from && e.to == to && tag.is_none_or(|t| e.tag == t))
            .map(|e| e.bytes)
            .sum()
    }
}

/// In-process transport over `mpsc` channels carrying encoded frames.
pub struct InProcTransport {
    me: Role,
    tx: Vec<(Role, Sender<Vec<u8>>)>,
    rx: Vec<(Role, Receiver<Vec<u8>>)>,
    log: TrafficLog,
}

impl InProcTransport {
    /// Fully connected `(client, cs, ps)` endpoints sharing `log`.
    pub fn triple(log: &TrafficLog) -> (Self, Self, Self) {
        let mut eps: Vec<Self> = Role::ALL
            .iter()
            .map(|&me| Self {
                me,
                tx: Vec::new(),
                rx: Vec::new(),
                log: log.clone(),
            })
            .collect();
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    let (s, r) = channel();
                    eps[a].tx.push((Role::ALL[b], s));
                    eps[b].rx.push((Role::ALL[a], r));
                }
            }
        }
        let ps = eps.pop().unwrap();
        let cs = eps.pop().unwrap();
        let c = eps.pop().unwrap();
        (c, cs, ps)
    }
}

impl Transport for InProcTransport {
    fn send(&mut self, to: Role, msg: Message) -> Result<(), ProtocolError> {
        let frame = msg.to_frame();
        self.log.record(TrafficEntry {
            from: self.me,
            to,
            tag: msg.tag,
            bytes: frame.len(),
        });
        let tx = self
            .tx
            .iter()
            .find(|(r, _)| *r == to)
            .ok_or(ProtocolError::Disconnected)?;
        tx.1.send(frame).map_err(|_| ProtocolError::Disconnected)
    }

    fn recv(&mut self, from: Role) -> Result<Option<Message>, ProtocolError> {
        let rx = self
            .rx
            .iter()
            .find(|(r, _)| *r == from)
            .ok_or(ProtocolError::Disconnected)?;
        match rx.1.recv() {
            Ok(frame) => Message::from_frame(&frame).map(Some),
            Err(_) => Ok(None),
        }
    }
}

fn expect<T: Transport>(t: &mut T, from: Role, tag: Tag) -> Result<Message, ProtocolError> {
    let m = t.recv(from)?.ok_or(ProtocolError::Disconnected)?;
    if m.tag == Tag::Error {
        return Err(ProtocolError::Remote(
            String::from_utf8_lossy(&m.payload).into_owned(),
        ));
    }
    if m.tag != tag {
        return Err(ProtocolError::Unexpected {
            expected: tag.name(),
            got: m.tag.name(),
        });
    }
    Ok(m)
}

// ---------------------------------------------------------------- cloud server

/// Runs the CS until the client disconnects.
pub fn run_cs<T: Transport, R: RngCore + CryptoRng>(
    t: &mut T,
    rng: &mut R,
    opts: CsOptions,
) -> Result<(), ProtocolError> {
    let Some(first) = t.recv(Role::Client)? else {
        return Ok(());
    };
    if first.tag != Tag::SetupPk {
        return Err(ProtocolError::Unexpected {
            expected: Tag::SetupPk.name(),
            got: first.tag.name(),
        });
    }
    let (pk, info) = wire::decode_setup_pk(&first.payload)?;
    let mut cs = CloudServer::new(pk, info, opts);
    while let Some(m) = t.recv(Role::Client)? {
        match m.tag {
            Tag::UploadT => {
                let (n, mat) = wire::decode_upload_t(cs.pk(), &m.payload)?;
                cs.load_t(n, mat)?;
            }
            Tag::UploadTp => {
                let (n, mat) = wire::decode_upload_tp(cs.pk(), &m.payload)?;
                cs.load_tp(n, mat)?;
            }
            Tag::Trapdoor => {
                let td = Trapdoor::decode(&m.payload)?;
                cs_query(t, &cs, &td, rng)?;
            }
            other => {
                return Err(ProtocolError::Unexpected {
                    expected: Tag::Trapdoor.name(),
                    got: other.name(),
                })
            }
        }
    }
    Ok(())
}

fn cs_query<T: Transport, R: RngCore + CryptoRng>(
    t: &mut T,
    cs: &CloudServer,
    td: &Trapdoor,
    rng: &mut R,
) -> Result<(), ProtocolError> {
    let pk = cs.pk();
    let variant = cs.info().variant;
    let uses_ii =
        matches!(td.kind, QueryKind::LinkPrediction | QueryKind::TopK) && variant == Variant::II;
    let report_to = match td.kind {
        QueryKind::Degree | QueryKind::Adjacency => Role::Client,
        _ if uses_ii => Role::Client,
        _ => Role::Ps,
    };
    let fail = |t: &mut T, e: ProtocolError| t.send(report_to, Message::error(&e.to_string()));
    match td.kind {
        QueryKind::Degree | QueryKind::Adjacency => {
            let r = if td.kind == QueryKind::Degree {
                cs.degree(td)
            } else {
                cs.adjacency(td)
            };
            match r {
                Ok(c) => t.send(
                    Role::Client,
                    Message::new(Tag::Result, wire::encode_ct_result(pk, &c)),
                ),
                Err(e) => fail(t, e),
            }
        }
        QueryKind::Neighbor => match cs.row(td) {
            Ok(row) => t.send(
                Role::Ps,
                Message::new(Tag::RowI, wire::encode_g_vec(pk, &row)),
            ),
            Err(e) => fail(t, e),
        },
        _ if uses_ii => match cs.query_slp2(td, rng) {
            Ok((d, deg)) => {
                let k = if td.kind == QueryKind::TopK {
                    td.arg
                } else {
                    0
                };
                t.send(
                    Role::Client,
                    Message::new(Tag::DegreeII, wire::encode_ct_result(pk, &deg)),
                )?;
                t.send(
                    Role::Ps,
                    Message::new(Tag::ScoresII, wire::encode_scores(pk, k, &d)),
                )
            }
            Err(e) => fail(t, e),
        },
        _ if variant == Variant::III && td.kind == QueryKind::LinkPrediction => {
            match cs.query_slp3(td, rng) {
                Ok(q) => {
                    t.send(
                        Role::Ps,
                        Message::new(
                            Tag::ScoresIII,
                            wire::encode_scores_iii(pk, &q.c_bar, &q.m_bar),
                        ),
                    )?;
                    t.send(Role::Ps, Message::new(Tag::GcBlob, q.gc.to_bytes()))?;
                    let (sender, ot1) = OtSender::new(rng);
                    t.send(Role::Ps, Message::new(Tag::Ot1, ot1.to_bytes()))?;
                    let m = t.recv(Role::Ps)?.ok_or(ProtocolError::Disconnected)?;
                    match m.tag {
                        Tag::Ot2 => {}
                        // The PS already told the client.
                        Tag::Error => return Ok(()),
                        other => {
                            return Err(ProtocolError::Unexpected {
                                expected: Tag::Ot2.name(),
                                got: other.name(),
                            })
                        }
                    }
                    let pairs: Vec<(Vec<u8>, Vec<u8>)> = q
                        .labels
                        .ps_pairs
                        .iter()
                        .map(|(a, b)| (a.to_le_bytes().to_vec(), b.to_le_bytes().to_vec()))
                        .collect();
                    let ot3 = Ot2::from_bytes(&m.payload)
                        .map_err(ProtocolError::from)
                        .and_then(|ot2| Ok(sender.respond(&ot2, &pairs)?));
                    match ot3 {
                        Ok(ot3) => t.send(Role::Ps, Message::new(Tag::Ot3, ot3.to_bytes())),
                        Err(e) => fail(t, e),
                    }
                }
                Err(e) => fail(t, e),
            }
        }
        _ => match cs.query_slp1(td, rng) {
            Ok((c, m)) => {
                let k = if td.kind == QueryKind::TopK {
                    td.arg
                } else {
                    0
                };
                t.send(
                    Role::Ps,
                    Message::new(Tag::ScoresI, wire::encode_scores(pk, k, &c)),
                )?;
                t.send(
                    Role::Ps,
                    Message::new(Tag::RowI, wire::encode_g_vec(pk, &m)),
                )
            }
            Err(e) => fail(t, e),
        },
    }
}

// ---------------------------------------------------------------- proxy server

/// Runs the PS until the CS disconnects.
pub fn run_ps<T: Transport, R: RngCore + CryptoRng>(
    t: &mut T,
    rng: &mut R,
) -> Result<(), ProtocolError> {
    let Some(first) = t.recv(Role::Client)? else {
        return Ok(());
    };
    if first.tag != Tag::SetupPk {
        return Err(ProtocolError::Unexpected {
            expected: Tag::SetupPk.name(),
            got: first.tag.name(),
        });
    }
    let (pk, info) = wire::decode_setup_pk(&first.payload)?;
    let sk_msg = expect(t, Role::Client, Tag::SetupSkToPs)?;
    let sk = crate::bgn::SecretKey {
        q1: wire::decode_setup_sk(&sk_msg.payload)?,
    };
    let ps = ProxyServer::new(pk, sk, info)?;
    while let Some(m) = t.recv(Role::Cs)? {
        let reply = match ps_handle(t, &ps, m, rng) {
            Ok(reply) => reply,
            Err(e @ (ProtocolError::Transport(_) | ProtocolError::Disconnected)) => return Err(e),
            Err(e) => Message::error(&e.to_string()),
        };
        t.send(Role::Client, reply)?;
    }
    Ok(())
}

fn ps_handle<T: Transport, R: RngCore + CryptoRng>(
    t: &mut T,
    ps: &ProxyServer,
    m: Message,
    rng: &mut R,
) -> Result<Message, ProtocolError> {
    let pk = ps.pk();
    match m.tag {
        Tag::Error => Ok(m),
        Tag::ScoresI => {
            let (k, c) = wire::decode_scores(pk, &m.payload)?;
            let row = expect(t, Role::Cs, Tag::RowI)?;
            let a = wire::decode_g_vec(pk, &row.payload)?;
            let idx = ps.top_k_slp1(&c, &a, if k == 0 { 1 } else { k as usize })?;
            Ok(Message::new(Tag::Result, wire::encode_indices(&idx)))
        }
        Tag::RowI => {
            let row = wire::decode_g_vec(pk, &m.payload)?;
            Ok(Message::new(
                Tag::Result,
                wire::encode_bits(&ps.neighbor_bits(&row)?),
            ))
        }
        Tag::ScoresII => {
            let (_, d) = wire::decode_scores(pk, &m.payload)?;
            Ok(Message::new(
                Tag::SortedII,
                wire::encode_sorted(&ps.sort_slp2(&d)?),
            ))
        }
        Tag::ScoresIII => {
            let blob = expect(t, Role::Cs, Tag::GcBlob)?;
            let ot1 = expect(t, Role::Cs, Tag::Ot1)?;
            let prepared = (|| {
                let (c, a) = wire::decode_scores_iii(pk, &m.payload)?;
                let gc = GarbledCircuit::from_bytes(&blob.payload)?;
                let choices = ps.slp3_choices(&c, &a, gc.header[1] as usize)?;
                let (recv, ot2) = OtReceiver::new(&Ot1::from_bytes(&ot1.payload)?, &choices, rng)?;
                Ok::<_, ProtocolError>((gc, recv, ot2))
            })();
            let (gc, recv, ot2) = match prepared {
                Ok(x) => x,
                Err(e) => {
                    t.send(Role::Cs, Message::error(&e.to_string()))?;
                    return Err(e);
                }
            };
            t.send(Role::Cs, Message::new(Tag::Ot2, ot2.to_bytes()))?;
            let ot3 = expect(t, Role::Cs, Tag::Ot3)?;
            let labels: Vec<Label> = recv
                .finish(&Ot3::from_bytes(&ot3.payload)?)?
                .into_iter()
                .map(|b| {
                    let arr: [u8; 16] = b
                        .try_into()
                        .map_err(|_| ProtocolError::Malformed("label length".into()))?;
                    Ok(Label::from_le_bytes(arr))
                })
                .collect::<Result<_, ProtocolError>>()?;
            let idx = ps.slp3_eval(&gc, &labels)?;
            Ok(Message::new(Tag::Result, wire::encode_indices(&[idx])))
        }
        other => Err(ProtocolError::Unexpected {
            expected: "a query message",
            got: other.name(),
        }),
    }
}

// ---------------------------------------------------------------- client

/// Client endpoint: owns the keys and drives queries.
pub struct ClientSession<T: Transport, R: RngCore + CryptoRng> {
    t: T,
    keys: ClientKeys,
    info: SessionInfo,
    rng: R,
    n: Option<usize>,
    deg_solver: Option<SolverG>,
}

impl<T: Transport, R: RngCore + CryptoRng> ClientSession<T, R> {
    /// Sends the public key to both servers and `q1` to the PS.
    pub fn setup(
        mut t: T,
        keys: ClientKeys,
        info: SessionInfo,
        rng: R,
    ) -> Result<Self, ProtocolError> {
        if info.r_max == 0 || info.n_max == 0 {
            return Err(ProtocolError::Domain(
                "n_max and r_max must be positive".into(),
            ));
        }
        let setup = wire::encode_setup_pk(keys.pk(), &info);
        t.send(Role::Cs, Message::new(Tag::SetupPk, setup.clone()))?;
        t.send(Role::Ps, Message::new(Tag::SetupPk, setup))?;
        t.send(
            Role::Ps,
            Message::new(Tag::SetupSkToPs, wire::encode_setup_sk(&keys.sk().q1)),
        )?;
        Ok(Self {
            t,
            keys,
            info,
            rng,
            n: None,
            deg_solver: None,
        })
    }

    pub fn keys(&self) -> &ClientKeys {
        &self.keys
    }

    pub fn info(&self) -> &SessionInfo {
        &self.info
    }

    fn pk(&self) -> &PublicKey {
        self.keys.pk()
    }

    /// Encrypts and uploads `graph`, replacing any earlier upload.
    pub fn upload(&mut self, graph: &Graph) -> Result<(), ProtocolError> {
        let n = graph.n();
        if n == 0 || n > self.info.n_max as usize {
            return Err(ProtocolError::Domain(format!(
                "graph order {n} outside [1, {}]",
                self.info.n_max
            )));
        }
        let enc = client::encrypt_graph(graph, &self.keys, self.info.variant, &mut self.rng)?;
        self.upload_encrypted(&enc)
    }

    pub fn upload_encrypted(&mut self, enc: &client::EncryptedGraph) -> Result<(), ProtocolError> {
        let payload = wire::encode_upload_t(self.pk(), enc.n, &enc.t);
        self.t.send(Role::Cs, Message::new(Tag::UploadT, payload))?;
        if let Some(tp) = &enc.tp {
            let payload = wire::encode_upload_tp(self.pk(), enc.n, tp);
            self.t
                .send(Role::Cs, Message::new(Tag::UploadTp, payload))?;
        }
        self.n = Some(enc.n);
        Ok(())
    }

    fn n(&self) -> Result<usize, ProtocolError> {
        self.n
            .ok_or_else(|| ProtocolError::Domain("no graph uploaded".into()))
    }

    fn check_vertex(&self, v: usize) -> Result<usize, ProtocolError> {
        let n = self.n()?;
        if v >= n {
            return Err(ProtocolError::Domain(format!(
                "vertex {v} outside [0, {n})"
            )));
        }
        Ok(n)
    }

    fn send_trapdoor(
        &mut self,
        v: usize,
        kind: QueryKind,
        arg: u32,
    ) -> Result<Resolver, ProtocolError> {
        let n = self.check_vertex(v)?;
        let td = client::make_trapdoor(&self.keys, n, v, kind, arg, &mut self.rng)?;
        self.t
            .send(Role::Cs, Message::new(Tag::Trapdoor, td.encode()))?;
        Resolver::new(&self.keys, n, v, &td)
    }

    fn decrypt_degree(&mut self, payload: &[u8]) -> Result<u64, ProtocolError> {
        let c = wire::decode_ct_result(self.keys.pk(), payload)?;
        if self.deg_solver.is_none() {
            self.deg_solver = Some(self.keys.sk().solver_g(
                self.keys.pk(),
                self.info.n_max as u64,
                false,
            ));
        }
        Ok(self
            .keys
            .sk()
            .decrypt_g(self.keys.pk(), &c, self.deg_solver.as_ref().unwrap())?)
    }

    /// Ranked non-neighbours of `v` by common-neighbour count, at most `k`.
    fn ranked(&mut self, v: usize, kind: QueryKind, k: usize) -> Result<Vec<usize>, ProtocolError> {
        let arg = if kind == QueryKind::TopK { k as u32 } else { 0 };
        let res = self.send_trapdoor(v, kind, arg)?;
        match self.info.variant {
            Variant::II => {
                let deg_msg = expect(&mut self.t, Role::Cs, Tag::DegreeII)?;
                let deg = self.decrypt_degree(&deg_msg.payload)?;
                let sorted = expect(&mut self.t, Role::Ps, Tag::SortedII)?;
                res.pick_sorted(&wire::decode_sorted(&sorted.payload)?, deg, k)
            }
            _ => {
                let m = expect(&mut self.t, Role::Ps, Tag::Result)?;
                let mut out = Vec::new();
                for pos in wire::decode_indices(&m.payload)? {
                    if let Some(u) = res.candidate(pos)? {
                        out.push(u);
                    }
                }
                Ok(out)
            }
        }
    }

    /// The predicted link for `v`, or `None` if `v` has no non-neighbour.
    pub fn link_prediction(&mut self, v: usize) -> Result<Option<usize>, ProtocolError> {
        Ok(self
            .ranked(v, QueryKind::LinkPrediction, 1)?
            .first()
            .copied())
    }

    /// Up to `k` predicted links, best first.
    pub fn top_k(&mut self, v: usize, k: usize) -> Result<Vec<usize>, ProtocolError> {
        if k == 0 {
            return Err(ProtocolError::Domain("k must be positive".into()));
        }
        self.ranked(v, QueryKind::TopK, k)
    }

    pub fn neighbors(&mut self, v: usize) -> Result<Vec<usize>, ProtocolError> {
        let res = self.send_trapdoor(v, QueryKind::Neighbor, 0)?;
        let m = expect(&mut self.t, Role::Ps, Tag::Result)?;
        res.neighbors(&wire::decode_bits(&m.payload)?)
    }

    pub fn degree(&mut self, v: usize) -> Result<u64, ProtocolError> {
        self.send_trapdoor(v, QueryKind::Degree, 0)?;
        let m = expect(&mut self.t, Role::Cs, Tag::Result)?;
        self.decrypt_degree(&m.payload)
    }

    pub fn adjacency(&mut self, u: usize, v: usize) -> Result<bool, ProtocolError> {
        let n = self.check_vertex(v)?;
        let second = self.keys.prp(n)?.apply(v as u64)? as u32;
        self.send_trapdoor(u, QueryKind::Adjacency, second)?;
        let m = expect(&mut self.t, Role::Cs, Tag::Result)?;
        let c = wire::decode_ct_result(self.keys.pk(), &m.payload)?;
        match client::decrypt_small(&self.keys, &c, 1)? {
            0 => Ok(false),
            _ => Ok(true),
        }
    }

    /// Ends the session; servers exit once their inbound channels close.
    pub fn close(self) {
        drop(self.t);
    }
}
