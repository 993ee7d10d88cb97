use std::net::TcpListener;
use std::time::{Duration, Instant};

use anyhow::{anyhow, bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use slp_core::graph::{Graph, LoadStats};
use slp_core::protocol::party::{TrafficEntry, TrafficLog};
use slp_core::protocol::{
    run_cs, run_ps, ClientKeys, ClientSession, CsOptions, InProcTransport, ProtocolError, Role,
    SessionInfo, Transport,
};

use crate::config::{role_rng, GraphSource, SessionConfig, TransportSpec};
use crate::data::load_graph;
use crate::tcp::TcpTransport;

/// `(from, to, tag)`.
type TrafficKey = (Role, Role, &'static str);

pub const CONNECT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryRecord {
    pub vertex: usize,
    pub answer: Option<usize>,
    /// Oracle score of the answer.
    pub score: Option<u64>,
    /// Best oracle score over all candidates, `None` if there are none.
    pub oracle_max: Option<u64>,
    /// Oracle verdict when verification is on.
    pub ok: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub config: SessionConfig,
    pub n: usize,
    pub edges: usize,
    pub load_stats: Option<LoadStats>,
    pub queries: Vec<QueryRecord>,
    pub traffic: Vec<TrafficEntry>,
    pub encrypt_time: Duration,
    pub query_time: Duration,
}

impl RunReport {
    pub fn failures(&self) -> usize {
        self.queries.iter().filter(|q| q.ok == Some(false)).count()
    }

    /// Line-oriented `key=value` summary.
    pub fn to_kv(&self) -> String {
        let mut s = format!(
            "run variant={} lambda_bits={} n={} edges={} queries={} failures={} encrypt_ms={:.3} query_ms={:.3}\n",
            self.config.variant.name(),
            self.config.lambda_bits,
            self.n,
            self.edges,
            self.queries.len(),
            self.failures(),
            self.encrypt_time.as_secs_f64() * 1e3,
            self.query_time.as_secs_f64() * 1e3,
        );
        if let Some(st) = &self.load_stats {
            s += &format!(
                "load raw_edge_lines={} distinct_ids={} kept_lines={} self_loops={} directed_edges={} undirected_edges={}\n",
                st.raw_edge_lines, st.distinct_ids, st.kept_lines, st.self_loops, st.directed_edges, st.undirected_edges
            );
        }
        for q in &self.queries {
            let opt = |x: Option<usize>| x.map_or("none".to_string(), |v| v.to_string());
            s += &format!(
                "query vertex={} answer={} score={} oracle_max={} ok={}\n",
                q.vertex,
                opt(q.answer),
                q.score.map_or("none".to_string(), |v| v.to_string()),
                q.oracle_max.map_or("none".to_string(), |v| v.to_string()),
                q.ok.map_or("unchecked".to_string(), |v| v.to_string()),
            );
        }
        let mut agg: Vec<(TrafficKey, (usize, usize))> = Vec::new();
        for e in &self.traffic {
            let key = (e.from, e.to, e.tag.name());
            match agg.iter_mut().find(|(k, _)| *k == key) {
                Some((_, (c, b))) => {
                    *c += 1;
                    *b += e.bytes;
                }
                None => agg.push((key, (1, e.bytes))),
            }
        }
        for ((from, to, tag), (count, bytes)) in agg {
            s += &format!(
                "traffic from={} to={} tag={} frames={} bytes={}\n",
                from.name(),
                to.name(),
                tag,
                count,
                bytes
            );
        }
        s
    }
}

/// Graph for a config, plus loader statistics for edge-list inputs.
pub fn build_graph(cfg: &SessionConfig) -> Result<(Graph, Option<LoadStats>)> {
    match &cfg.graph {
        GraphSource::Random { n, p } => Ok((
            Graph::erdos_renyi(*n, *p, &mut ChaCha20Rng::seed_from_u64(cfg.seed)),
            None,
        )),
        GraphSource::File { path, prefix } => load_graph(path, *prefix),
    }
}

/// Plaintext verdict for one answer.
pub fn check_answer(g: &Graph, v: usize, answer: Option<usize>) -> Result<QueryRecord> {
    let oracle = g.argmax_oracle(v)?;
    let oracle_max = match oracle.iter().next() {
        Some(&u) => Some(g.score(v, u)?),
        None => None,
    };
    let score = match answer {
        Some(u) if u < g.n() => Some(g.score(v, u)?),
        _ => None,
    };
    let ok = match answer {
        Some(u) => oracle.contains(&u),
        None => oracle.is_empty(),
    };
    Ok(QueryRecord {
        vertex: v,
        answer,
        score,
        oracle_max,
        ok: Some(ok),
    })
}

fn attribute(role: Role, r: std::thread::Result<Result<(), ProtocolError>>) -> Result<()> {
    match r {
        Ok(Ok(())) => Ok(()),
        Ok(Err(e)) => Err(anyhow!(e).context(format!("{} failed", role.name()))),
        Err(_) => bail!("{} panicked", role.name()),
    }
}

/// Setup, upload and queries with freshly generated keys.
pub fn run_end_to_end(cfg: &SessionConfig) -> Result<RunReport> {
    cfg.validate()?;
    let mut rng = role_rng(cfg.seed, Role::Client);
    let keys = ClientKeys::generate(cfg.lambda_bits, &mut rng).context("client key generation")?;
    run_with_keys(cfg, keys, rng)
}

pub fn run_with_keys(cfg: &SessionConfig, keys: ClientKeys, rng: ChaCha20Rng) -> Result<RunReport> {
    cfg.validate()?;
    let (graph, load_stats) = build_graph(cfg)?;
    let info = SessionInfo {
        variant: cfg.variant,
        n_max: graph.n() as u32,
        r_max: cfg.r_max,
    };
    let log = TrafficLog::new();
    match &cfg.transport {
        TransportSpec::InProc => {
            let (c, mut cs_t, mut ps_t) = InProcTransport::triple(&log);
            let (seed, opts) = (cfg.seed, cfg.cs_opts);
            let cs =
                std::thread::spawn(move || run_cs(&mut cs_t, &mut role_rng(seed, Role::Cs), opts));
            let ps = std::thread::spawn(move || run_ps(&mut ps_t, &mut role_rng(seed, Role::Ps)));
            let client = drive(cfg, c, keys, info, rng, &graph, load_stats, &log);
            // The client transport is dropped by now, so both servers wind down.
            let cs_r = attribute(Role::Cs, cs.join());
            let ps_r = attribute(Role::Ps, ps.join());
            let report = client?;
            cs_r?;
            ps_r?;
            Ok(report)
        }
        TransportSpec::Tcp { cs, ps } => {
            let t = TcpTransport::client(cs, ps, CONNECT_TIMEOUT)
                .context("client transport")?
                .with_log(log.clone());
            drive(cfg, t, keys, info, rng, &graph, load_stats, &log)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn drive<T: Transport>(
    cfg: &SessionConfig,
    t: T,
    keys: ClientKeys,
    info: SessionInfo,
    mut rng: ChaCha20Rng,
    graph: &Graph,
    load_stats: Option<LoadStats>,
    log: &TrafficLog,
) -> Result<RunReport> {
    let mut pick = ChaCha20Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let vertices: Vec<usize> = (0..cfg.queries)
        .map(|_| pick.gen_range(0..graph.n()))
        .collect();
    let session_rng = ChaCha20Rng::from_seed(rng.gen());
    let mut session = ClientSession::setup(t, keys, info, session_rng).context("client setup")?;
    let start = Instant::now();
    session.upload(graph).context("client upload")?;
    let encrypt_time = start.elapsed();
    let start = Instant::now();
    let mut queries = Vec::new();
    for &v in &vertices {
        let answer = session
            .link_prediction(v)
            .with_context(|| format!("client query for vertex {v}"))?;
        let rec = if cfg.verify {
            check_answer(graph, v, answer)?
        } else {
            QueryRecord {
                vertex: v,
                answer,
                score: None,
                oracle_max: None,
                ok: None,
            }
        };
        log::info!("vertex {v} -> {answer:?}");
        queries.push(rec);
    }
    let query_time = start.elapsed();
    session.close();
    Ok(RunReport {
        config: cfg.clone(),
        n: graph.n(),
        edges: graph.edge_count(),
        load_stats,
        queries,
        traffic: log.entries(),
        encrypt_time,
        query_time,
    })
}

/// Runs a server role over TCP until its peers disconnect.
pub fn serve(
    role: Role,
    listen: &str,
    ps_addr: Option<&str>,
    seed: u64,
    opts: CsOptions,
) -> Result<()> {
    let listener = TcpListener::bind(listen).with_context(|| format!("binding {listen}"))?;
    log::info!("{} listening on {}", role.name(), listener.local_addr()?);
    serve_on(role, &listener, ps_addr, seed, opts)
}

pub fn serve_on(
    role: Role,
    listener: &TcpListener,
    ps_addr: Option<&str>,
    seed: u64,
    opts: CsOptions,
) -> Result<()> {
    let mut rng = role_rng(seed, role);
    let r = match role {
        Role::Cs => {
            let ps = ps_addr.ok_or_else(|| anyhow!("the cs role needs the ps address"))?;
            let mut t = TcpTransport::cs(listener, ps, CONNECT_TIMEOUT)?;
            run_cs(&mut t, &mut rng, opts)
        }
        Role::Ps => {
            let mut t = TcpTransport::ps(listener)?;
            run_ps(&mut t, &mut rng)
        }
        Role::Client => bail!("the client role is driven by `run` or the query commands"),
    };
    r.with_context(|| format!("{} failed", role.name()))
}
