use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use slp_core::protocol::client::{encrypt_graph, EncryptedGraph};
use slp_core::protocol::party::TrafficLog;
use slp_core::protocol::{
    run_cs, run_ps, ClientKeys, ClientSession, CsOptions, InProcTransport, Role, SessionInfo,
    Variant, DEFAULT_R_MAX,
};
use slp_harness::bench::{bench, fit_power_law, BenchGrid, Phase};
use slp_harness::config::{role_rng, GraphSource, SessionConfig, TransportSpec};
use slp_harness::run::{build_graph, run_end_to_end, serve};
use slp_harness::store::{read_encrypted, write_encrypted};

#[derive(Parser)]
#[command(
    name = "slp",
    version,
    about = "Secure link prediction over an encrypted graph"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a client key bundle.
    Keygen {
        #[arg(long, default_value_t = 32)]
        lambda_bits: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encrypt a graph for upload.
    Encrypt {
        #[arg(long)]
        keys: PathBuf,
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value = "SLP-I", value_parser = parse_variant)]
        variant: Variant,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Link prediction for one vertex against an encrypted graph.
    Query {
        #[command(flatten)]
        stored: StoredArgs,
        #[arg(long)]
        vertex: usize,
    },
    /// Top-k link prediction.
    Slpk {
        #[command(flatten)]
        stored: StoredArgs,
        #[arg(long)]
        vertex: usize,
        #[arg(long)]
        k: usize,
    },
    /// Neighbour, degree or adjacency query.
    Basic {
        #[command(flatten)]
        stored: StoredArgs,
        #[arg(value_enum)]
        kind: BasicKind,
        #[arg(long)]
        vertex: usize,
        /// Second vertex for `adjacent`.
        #[arg(long)]
        other: Option<usize>,
    },
    /// End-to-end run with fresh keys and oracle checks.
    Run {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value = "SLP-I", value_parser = parse_variant)]
        variant: Variant,
        #[arg(long, default_value_t = 32)]
        lambda_bits: u32,
        #[arg(long, default_value_t = DEFAULT_R_MAX)]
        r_max: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        queries: usize,
        #[arg(long)]
        no_verify: bool,
        /// CS address; with `--ps`, runs the client against TCP servers.
        #[arg(long, requires = "ps")]
        cs: Option<String>,
        #[arg(long, requires = "cs")]
        ps: Option<String>,
    },
    /// Serve the CS or PS role over TCP.
    Serve {
        #[arg(long, value_parser = parse_role)]
        role: Role,
        #[arg(long)]
        listen: String,
        /// PS address, required for the CS role.
        #[arg(long)]
        ps: Option<String>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        compact_index: bool,
    },
    /// Time the three phases over a grid of graph sizes.
    Bench {
        /// Comma-separated vertex counts.
        #[arg(long, value_delimiter = ',', default_value = "50,100,150,200")]
        grid: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0.1")]
        densities: Vec<f64>,
        #[arg(long, default_value = "SLP-I", value_parser = parse_variant)]
        variant: Variant,
        #[arg(long, default_value_t = 32)]
        lambda_bits: u32,
        #[arg(long, default_value_t = DEFAULT_R_MAX)]
        r_max: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Args)]
struct GraphArgs {
    /// SNAP edge list or binary cache.
    #[arg(long, conflicts_with = "random")]
    graph: Option<PathBuf>,
    /// Keep only vertex ids below this bound.
    #[arg(long, requires = "graph")]
    prefix: Option<usize>,
    /// Random graph as `N:p`.
    #[arg(long, value_parser = parse_random)]
    random: Option<(usize, f64)>,
}

impl GraphArgs {
    fn source(&self) -> Result<GraphSource> {
        match (&self.graph, self.random) {
            (Some(path), None) => Ok(GraphSource::File {
                path: path.clone(),
                prefix: self.prefix,
            }),
            (None, Some((n, p))) => Ok(GraphSource::Random { n, p }),
            _ => bail!("give exactly one of --graph or --random"),
        }
    }
}

#[derive(Args)]
struct StoredArgs {
    #[arg(long)]
    keys: PathBuf,
    #[arg(long)]
    encrypted: PathBuf,
    #[arg(long, default_value_t = DEFAULT_R_MAX)]
    r_max: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Expected variant; the file records the one it was encrypted for.
    #[arg(long, value_parser = parse_variant)]
    variant: Option<Variant>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BasicKind {
    Neighbor,
    Degree,
    Adjacent,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    Variant::parse(s).ok_or_else(|| format!("unknown variant {s:?}"))
}

fn parse_role(s: &str) -> Result<Role, String> {
    Role::parse(s).ok_or_else(|| format!("unknown role {s:?}"))
}

fn parse_random(s: &str) -> Result<(usize, f64), String> {
    let (n, p) = s.split_once(':').ok_or("expected N:p")?;
    Ok((
        n.parse().map_err(|e| format!("{e}"))?,
        p.parse().map_err(|e| format!("{e}"))?,
    ))
}

fn load_keys(path: &PathBuf) -> Result<ClientKeys> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(ClientKeys::from_text(&text)?)
}

/// Opens an in-process session on a stored encrypted graph and hands it to `f`.
fn with_stored<T>(
    args: &StoredArgs,
    f: impl FnOnce(&mut ClientSession<InProcTransport, ChaCha20Rng>) -> Result<T>,
) -> Result<T> {
    let keys = load_keys(&args.keys)?;
    let file = File::open(&args.encrypted)
        .with_context(|| format!("opening {}", args.encrypted.display()))?;
    let (variant, enc): (Variant, EncryptedGraph) =
        read_encrypted(BufReader::new(file), keys.pk())?;
    if let Some(want) = args.variant {
        if want != variant {
            bail!(
                "{} holds a {variant} encryption, not {want}",
                args.encrypted.display()
            );
        }
    }
    let info = SessionInfo {
        variant,
        n_max: enc.n as u32,
        r_max: args.r_max,
    };
    let log = TrafficLog::new();
    let (c, mut cs_t, mut ps_t) = InProcTransport::triple(&log);
    let seed = args.seed;
    let cs = std::thread::spawn(move || {
        run_cs(
            &mut cs_t,
            &mut role_rng(seed, Role::Cs),
            CsOptions::default(),
        )
    });
    let ps = std::thread::spawn(move || run_ps(&mut ps_t, &mut role_rng(seed, Role::Ps)));
    let out: Result<T> = (|| {
        let rng = ChaCha20Rng::from_seed(role_rng(seed, Role::Client).gen());
        let mut s = ClientSession::setup(c, keys, info, rng)?;
        s.upload_encrypted(&enc)?;
        let r = f(&mut s)?;
        s.close();
        Ok(r)
    })();
    let cs_r = cs.join().map_err(|_| anyhow::anyhow!("cs panicked"))?;
    let ps_r = ps.join().map_err(|_| anyhow::anyhow!("ps panicked"))?;
    let out = out?;
    cs_r.context("cs failed")?;
    ps_r.context("ps failed")?;
    Ok(out)
}

fn fmt_opt(v: Option<usize>) -> String {
    v.map_or("none".into(), |x| x.to_string())
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Keygen {
            lambda_bits,
            seed,
            out,
        } => {
            let keys = ClientKeys::generate(lambda_bits, &mut role_rng(seed, Role::Client))?;
            std::fs::write(&out, keys.to_text())
                .with_context(|| format!("writing {}", out.display()))?;
            println!("keys written to {}", out.display());
        }
        Cmd::Encrypt {
            keys,
            graph,
            variant,
            seed,
            out,
        } => {
            let keys = load_keys(&keys)?;
            let cfg = SessionConfig {
                graph: graph.source()?,
                seed,
                ..Default::default()
            };
            let (g, _) = build_graph(&cfg)?;
            let enc = encrypt_graph(&g, &keys, variant, &mut role_rng(seed, Role::Client))?;
            let f = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            write_encrypted(BufWriter::new(f), keys.pk(), variant, &enc)?;
            println!(
                "encrypted n={} variant={} to {}",
                g.n(),
                variant,
                out.display()
            );
        }
        Cmd::Query { stored, vertex } => {
            let ans = with_stored(&stored, |s| Ok(s.link_prediction(vertex)?))?;
            println!("vertex={vertex} answer={}", fmt_opt(ans));
        }
        Cmd::Slpk { stored, vertex, k } => {
            let ans = with_stored(&stored, |s| Ok(s.top_k(vertex, k)?))?;
            let list: Vec<String> = ans.iter().map(|x| x.to_string()).collect();
            println!("vertex={vertex} k={k} answer={}", list.join(","));
        }
        Cmd::Basic {
            stored,
            kind,
            vertex,
            other,
        } => {
            let line = with_stored(&stored, |s| {
                Ok(match kind {
                    BasicKind::Neighbor => {
                        let nb: Vec<String> =
                            s.neighbors(vertex)?.iter().map(|x| x.to_string()).collect();
                        format!("vertex={vertex} neighbors={}", nb.join(","))
                    }
                    BasicKind::Degree => format!("vertex={vertex} degree={}", s.degree(vertex)?),
                    BasicKind::Adjacent => {
                        let u = other.context("adjacent needs --other")?;
                        format!("u={vertex} v={u} adjacent={}", s.adjacency(vertex, u)?)
                    }
                })
            })?;
            println!("{line}");
        }
        Cmd::Run {
            graph,
            variant,
            lambda_bits,
            r_max,
            seed,
            queries,
            no_verify,
            cs,
            ps,
        } => {
            let transport = match (cs, ps) {
                (Some(cs), Some(ps)) => TransportSpec::Tcp { cs, ps },
                _ => TransportSpec::InProc,
            };
            let cfg = SessionConfig {
                variant,
                lambda_bits,
                graph: graph.source()?,
                r_max,
                seed,
                transport,
                queries,
                verify: !no_verify,
                cs_opts: CsOptions::default(),
            };
            let report = run_end_to_end(&cfg)?;
            print!("{}", report.to_kv());
            if report.failures() > 0 {
                bail!(
                    "{} of {} answers disagree with the oracle",
                    report.failures(),
                    report.queries.len()
                );
            }
        }
        Cmd::Serve {
            role,
            listen,
            ps,
            seed,
            compact_index,
        } => {
            let opts = CsOptions {
                compact_index,
                ..Default::default()
            };
            serve(role, &listen, ps.as_deref(), seed, opts)?;
        }
        Cmd::Bench {
            grid,
            densities,
            variant,
            lambda_bits,
            r_max,
            seed,
            repeats,
            threads,
        } => {
            let g = BenchGrid {
                ns: grid,
                densities,
                variant,
                lambda_bits,
                r_max,
                seed,
                repeats,
                threads,
            };
            let recs = bench(&g)?;
            for r in &recs {
                println!("{}", r.to_kv());
            }
            for &d in &g.densities {
                let enc: Vec<_> = recs
                    .iter()
                    .filter(|r| r.phase == Phase::Encrypt && r.density == d)
                    .collect();
                if enc.len() >= 2 {
                    let xs: Vec<f64> = enc.iter().map(|r| r.n as f64).collect();
                    let ys: Vec<f64> = enc.iter().map(|r| r.wall.as_secs_f64()).collect();
                    let (k, _, r2) = fit_power_law(&xs, &ys);
                    println!("fit phase=encrypt density={d} exponent={k:.3} r2={r2:.4}");
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
