//! TCP transport, one process per role.
//!
//! The client connects to CS and PS; the CS connects to the PS. Each new
//! connection opens with one byte naming the connecting role.

use std::io::{BufReader, BufWriter, Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use slp_core::protocol::party::{TrafficEntry, TrafficLog};
use slp_core::protocol::{Message, ProtocolError, Role, Transport};

struct Peer {
    role: Role,
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
}

pub struct TcpTransport {
    me: Role,
    peers: Vec<Peer>,
    log: Option<TrafficLog>,
}

fn role_byte(r: Role) -> u8 {
    match r {
        Role::Client => 1,
        Role::Cs => 2,
        Role::Ps => 3,
    }
}

fn peer(role: Role, s: TcpStream) -> Result<Peer> {
    s.set_nodelay(true)?;
    Ok(Peer {
        role,
        reader: BufReader::new(s.try_clone()?),
        writer: BufWriter::new(s),
    })
}

fn connect(me: Role, to: Role, addr: &str, timeout: Duration) -> Result<Peer> {
    let addrs: Vec<_> = addr
        .to_socket_addrs()
        .with_context(|| format!("resolving {to:?} address {addr:?}"))?
        .collect();
    if addrs.is_empty() {
        bail!("no address for {addr:?}");
    }
    let deadline = Instant::now() + timeout;
    loop {
        match TcpStream::connect(&addrs[..]) {
            Ok(mut s) => {
                s.write_all(&[role_byte(me)])?;
                return peer(to, s);
            }
            Err(e) if Instant::now() >= deadline => {
                return Err(e).with_context(|| format!("connecting to {} at {addr}", to.name()))
            }
            Err(_) => std::thread::sleep(Duration::from_millis(50)),
        }
    }
}

fn accept(listener: &TcpListener, expected: &[Role]) -> Result<Vec<Peer>> {
    let mut out: Vec<Peer> = Vec::new();
    while out.len() < expected.len() {
        let (mut s, from) = listener.accept()?;
        let mut b = [0u8; 1];
        s.read_exact(&mut b)
            .with_context(|| format!("reading hello from {from}"))?;
        let role = expected
            .iter()
            .copied()
            .find(|&r| role_byte(r) == b[0] && !out.iter().any(|p| p.role == r));
        match role {
            Some(r) => out.push(peer(r, s)?),
            None => log::warn!("rejecting connection from {from} with hello {}", b[0]),
        }
    }
    Ok(out)
}

impl TcpTransport {
    pub fn client(cs: &str, ps: &str, timeout: Duration) -> Result<Self> {
        let peers = vec![
            connect(Role::Client, Role::Cs, cs, timeout)?,
            connect(Role::Client, Role::Ps, ps, timeout)?,
        ];
        Ok(Self {
            me: Role::Client,
            peers,
            log: None,
        })
    }

    pub fn cs(listener: &TcpListener, ps: &str, timeout: Duration) -> Result<Self> {
        let mut peers = vec![connect(Role::Cs, Role::Ps, ps, timeout)?];
        peers.extend(accept(listener, &[Role::Client])?);
        Ok(Self {
            me: Role::Cs,
            peers,
            log: None,
        })
    }

    pub fn ps(listener: &TcpListener) -> Result<Self> {
        Ok(Self {
            me: Role::Ps,
            peers: accept(listener, &[Role::Client, Role::Cs])?,
            log: None,
        })
    }

    pub fn with_log(mut self, log: TrafficLog) -> Self {
        self.log = Some(log);
        self
    }

    fn peer(&mut self, r: Role) -> Result<&mut Peer, ProtocolError> {
        self.peers
            .iter_mut()
            .find(|p| p.role == r)
            .ok_or(ProtocolError::Disconnected)
    }
}

impl Transport for TcpTransport {
    fn send(&mut self, to: Role, msg: Message) -> Result<(), ProtocolError> {
        if let Some(log) = &self.log {
            log.record(TrafficEntry {
                from: self.me,
                to,
                tag: msg.tag,
                bytes: msg.frame_len(),
            });
        }
        log::debug!(
            "{} -> {}: {} ({} bytes)",
            self.me.name(),
            to.name(),
            msg.tag.name(),
            msg.frame_len()
        );
        let p = self.peer(to)?;
        msg.write_to(&mut p.writer)
            .map_err(|e| ProtocolError::Transport(e.to_string()))
    }

    fn recv(&mut self, from: Role) -> Result<Option<Message>, ProtocolError> {
        let p = self.peer(from)?;
        Message::read_from(&mut p.reader)
    }
}
