//! Acceptance suite: one `criterion N: PASS|FAIL` line per criterion.
//!
//! Run a subset with `cargo test --test acceptance -- 3 7`. The process
//! exits nonzero if any criterion fails on inputs that were available; a
//! criterion whose input data is absent from the environment reports FAIL
//! with the reason but does not change the exit status.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader};
use std::process::ExitCode;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use anyhow::{anyhow, bail, ensure, Context, Result};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use slp_core::bgn::PublicKey;
use slp_core::gc::{
    audit_counts, build_block, build_max, build_mgc, build_nss, decode_index, evaluate, garble,
    mgc_cs_inputs, mgc_ps_inputs, BlockKind, BlockRecordKind, Label, MaxVariant,
};
use slp_core::graph::Graph;
use slp_core::ot::{OtReceiver, OtSender};
use slp_core::pairing::TargetElement;
use slp_core::protocol::client::{decrypt_small, encrypt_graph, make_trapdoor, Resolver};
use slp_core::protocol::party::{TrafficEntry, TrafficLog};
use slp_core::protocol::{
    run_cs, run_ps, ClientKeys, ClientSession, CloudServer, CsOptions, InProcTransport,
    ProtocolError, ProxyServer, QueryKind, Role, SessionInfo, Tag, Variant, DEFAULT_R_MAX,
};
use slp_harness::bench::{bench, fit_power_law, BenchGrid, Phase};
use slp_harness::data::{data_dir, load_graph, EMAIL_EU_CORE};

const LAMBDA_BITS: u32 = 32;
const VARIANTS: [Variant; 3] = [Variant::I, Variant::II, Variant::III];

enum Verdict {
    Pass(String),
    Fail(String),
    /// Input data missing from the environment.
    Unavailable(String),
}

// ---------------------------------------------------------------- shared fixtures

type Session = ClientSession<InProcTransport, ChaCha20Rng>;

/// One client session with CS and PS threads.
struct Deployment {
    session: Option<Session>,
    servers: Vec<JoinHandle<Result<(), ProtocolError>>>,
    log: TrafficLog,
}

impl Deployment {
    fn start(
        keys: &ClientKeys,
        variant: Variant,
        n_max: usize,
        r_max: u64,
        seed: u64,
    ) -> Result<Self> {
        let log = TrafficLog::new();
        let (c, mut cs_t, mut ps_t) = InProcTransport::triple(&log);
        let servers = vec![
            std::thread::spawn(move || {
                run_cs(
                    &mut cs_t,
                    &mut ChaCha20Rng::seed_from_u64(seed ^ 0xc5),
                    CsOptions::default(),
                )
            }),
            std::thread::spawn(move || {
                run_ps(&mut ps_t, &mut ChaCha20Rng::seed_from_u64(seed ^ 0x95))
            }),
        ];
        let info = SessionInfo {
            variant,
            n_max: n_max as u32,
            r_max,
        };
        let session =
            ClientSession::setup(c, keys.clone(), info, ChaCha20Rng::seed_from_u64(seed))?;
        Ok(Self {
            session: Some(session),
            servers,
            log,
        })
    }

    fn s(&mut self) -> &mut Session {
        self.session.as_mut().expect("session open")
    }

    fn finish(mut self) -> Result<()> {
        if let Some(s) = self.session.take() {
            s.close();
        }
        for h in self.servers.drain(..) {
            h.join().map_err(|_| anyhow!("server panicked"))??;
        }
        Ok(())
    }
}

struct Ctx {
    keys: ClientKeys,
    /// SLP-II `(answers, adjacent answers)` seen by criterion 3.
    slp2_adjacent_answers: Option<(usize, usize)>,
}

fn random_graph(rng: &mut ChaCha20Rng, ns: &[usize], ps: &[f64], idx: usize) -> Graph {
    let n = ns[idx % ns.len()];
    let p = ps[(idx / ns.len()) % ps.len()];
    Graph::erdos_renyi(n, p, rng)
}

// ---------------------------------------------------------------- criterion 1

fn c1_bgn(ctx: &mut Ctx) -> Result<Verdict> {
    let start = Instant::now();
    let pk = ctx.keys.pk();
    let sk = ctx.keys.sk();
    let mut rng = ChaCha20Rng::seed_from_u64(101);
    let sg = sk.solver_g(pk, 1000, false);
    let sg1 = sk.solver_g1(pk, 250_000 + 1000, false);
    let mut bad = Vec::new();
    for i in 0..1000 {
        let a: u64 = rng.gen_range(0..=1000);
        let b: u64 = rng.gen_range(0..=1000 - a);
        let c: u64 = rng.gen_range(0..1000);
        let (ea, eb) = (pk.encrypt_g(a, &mut rng)?, pk.encrypt_g(b, &mut rng)?);
        let sum_g = sk.decrypt_g(pk, &pk.add_g(&ea, &eb), &sg)?;
        let (fa, fb) = (pk.encrypt_g1(a, &mut rng)?, pk.encrypt_g1(b, &mut rng)?);
        let sum_g1 = sk.decrypt_g1(pk, &pk.add_g1(&fa, &fb), &sg1)?;
        let prod = pk.add_g1(&pk.multiply(&ea, &eb), &pk.encrypt_g1(c, &mut rng)?);
        let prod = sk.decrypt_g1(pk, &prod, &sg1)?;
        if sum_g != a + b || sum_g1 != a + b || prod != a * b + c {
            bad.push(format!("#{i} a={a} b={b} c={c} -> {sum_g}/{sum_g1}/{prod}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "1000 triples, {} mismatches, {:.1}s (limit 300s)",
        bad.len(),
        secs
    );
    Ok(if bad.is_empty() && secs < 300.0 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail} {bad:?}"))
    })
}

// ---------------------------------------------------------------- criterion 2

/// `x^k` in `F_p[i]/(i² + 1)` on plain big integers.
fn fp2_pow_oracle(x: (BigUint, BigUint), k: &BigUint, p: &BigUint) -> (BigUint, BigUint) {
    let mul = |a: &(BigUint, BigUint), b: &(BigUint, BigUint)| {
        let re = (&a.0 * &b.0 + p * p - (&a.1 * &b.1) % p) % p;
        let im = (&a.0 * &b.1 + &a.1 * &b.0) % p;
        (re, im)
    };
    let mut acc = (BigUint::from(1u8), BigUint::from(0u8));
    for i in (0..k.bits()).rev() {
        acc = mul(&acc, &acc);
        if k.bit(i) {
            acc = mul(&acc, &x);
        }
    }
    acc
}

fn gt_parts(pk: &PublicKey, t: &TargetElement) -> (BigUint, BigUint) {
    let f = pk.group().field();
    (f.to_biguint(&t.0.c0), f.to_biguint(&t.0.c1))
}

fn c2_bilinearity(ctx: &mut Ctx) -> Result<Verdict> {
    let pk = ctx.keys.pk();
    let group = pk.group();
    let n = pk.n().clone();
    let p = group.params().p.clone();
    let e_gg = gt_parts(pk, &group.pairing(pk.g(), pk.g()));
    let mut rng = ChaCha20Rng::seed_from_u64(202);
    let mut bad = 0;
    for i in 0..100 {
        let (a, b) = match i {
            0 => (BigUint::from(0u8), group.random_scalar(&mut rng)),
            1 => (BigUint::from(1u8), BigUint::from(1u8)),
            _ => (
                group.random_scalar(&mut rng) % &n,
                group.random_scalar(&mut rng) % &n,
            ),
        };
        let lhs = group.pairing(&group.scalar_mul(pk.g(), &a), &group.scalar_mul(pk.g(), &b));
        let rhs = fp2_pow_oracle(e_gg.clone(), &((&a * &b) % &n), &p);
        if gt_parts(pk, &lhs) != rhs {
            bad += 1;
        }
    }
    let identity = fp2_pow_oracle(e_gg.clone(), &n, &p) == (BigUint::from(1u8), BigUint::from(0u8));
    let nondegenerate = e_gg != (BigUint::from(1u8), BigUint::from(0u8));
    let detail = format!(
        "100 pairs, {bad} mismatches, e(g,g)^n = 1: {identity}, e(g,g) != 1: {nondegenerate}"
    );
    Ok(if bad == 0 && identity && nondegenerate {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    })
}

// ---------------------------------------------------------------- criterion 3

fn c3_oracle_equivalence(ctx: &mut Ctx) -> Result<Verdict> {
    let ns = [8, 16, 32, 64];
    let ps = [0.1, 0.3, 0.6];
    let mut failures = Vec::new();
    let mut none_cases = 0;
    let mut adjacent = 0;
    let mut slp2_answers = 0;
    for variant in VARIANTS {
        let mut d = Deployment::start(&ctx.keys, variant, 64, DEFAULT_R_MAX, 300 + variant as u64)?;
        let mut rng = ChaCha20Rng::seed_from_u64(303);
        for gi in 0..50 {
            let g = random_graph(&mut rng, &ns, &ps, gi);
            d.s().upload(&g)?;
            for _ in 0..3 {
                let v = rng.gen_range(0..g.n());
                let ans = d.s().link_prediction(v)?;
                let oracle = g.argmax_oracle(v)?;
                let ok = match ans {
                    Some(u) => oracle.contains(&u),
                    None => oracle.is_empty(),
                };
                if ans.is_none() {
                    none_cases += 1;
                }
                if variant == Variant::II {
                    if let Some(u) = ans {
                        slp2_answers += 1;
                        adjacent += g.has_edge(v, u) as usize;
                    }
                }
                if !ok {
                    failures.push(format!(
                        "{variant} graph#{gi} n={} v={v} got {ans:?}",
                        g.n()
                    ));
                }
            }
        }
        d.finish()?;
    }
    ctx.slp2_adjacent_answers = Some((slp2_answers, adjacent));
    let detail = format!(
        "3 variants x 50 graphs x 3 queries, {} failures, {none_cases} no-candidate answers",
        failures.len()
    );
    Ok(if failures.is_empty() {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}: {failures:?}"))
    })
}

// ---------------------------------------------------------------- criterion 4

fn c4_cross_variant(ctx: &mut Ctx) -> Result<Verdict> {
    let mut rng = ChaCha20Rng::seed_from_u64(404);
    let instances: Vec<(Graph, usize)> = (0..20)
        .map(|i| {
            let g = random_graph(&mut rng, &[10, 20, 30], &[0.15, 0.35, 0.6], i);
            let v = rng.gen_range(0..g.n());
            (g, v)
        })
        .collect();
    let mut scores: Vec<Vec<Option<u64>>> = vec![Vec::new(); instances.len()];
    for variant in VARIANTS {
        let mut d = Deployment::start(&ctx.keys, variant, 30, DEFAULT_R_MAX, 400 + variant as u64)?;
        for (i, (g, v)) in instances.iter().enumerate() {
            d.s().upload(g)?;
            let ans = d.s().link_prediction(*v)?;
            scores[i].push(ans.map(|u| g.score(*v, u)).transpose()?);
        }
        d.finish()?;
    }
    let mismatched: Vec<usize> = (0..instances.len())
        .filter(|&i| scores[i].iter().any(|s| *s != scores[i][0]))
        .collect();
    let detail = format!("20 instances, {} with differing scores", mismatched.len());
    Ok(if mismatched.is_empty() {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!(
            "{detail}: {:?}",
            mismatched.iter().map(|&i| &scores[i]).collect::<Vec<_>>()
        ))
    })
}

// ---------------------------------------------------------------- criterion 5

fn c5_slp2_elimination(ctx: &mut Ctx) -> Result<Verdict> {
    let keys = &ctx.keys;
    let mut rng = ChaCha20Rng::seed_from_u64(505);
    let (mut entries, mut violations, mut answers, mut adjacent) = (0usize, 0usize, 0usize, 0usize);
    for gi in 0..30 {
        let g = random_graph(&mut rng, &[8, 16, 32], &[0.1, 0.3, 0.6], gi);
        let n = g.n();
        let info = SessionInfo {
            variant: Variant::II,
            n_max: n as u32,
            r_max: DEFAULT_R_MAX,
        };
        let enc = encrypt_graph(&g, keys, Variant::II, &mut rng)?;
        let mut cs = CloudServer::new(keys.pk().clone(), info, CsOptions::default());
        cs.load_t(n, enc.t)?;
        cs.load_tp(n, enc.tp.context("missing T'")?)?;
        let ps = ProxyServer::new(keys.pk().clone(), keys.sk().clone(), info)?;
        for _ in 0..3 {
            let v = rng.gen_range(0..n);
            let td = make_trapdoor(keys, n, v, QueryKind::LinkPrediction, 0, &mut rng)?;
            let (d, deg_ct) = cs.query_slp2(&td, &mut rng)?;
            let sorted = ps.sort_slp2(&d)?;
            let res = Resolver::new(keys, n, v, &td)?;
            let deg = decrypt_small(keys, &deg_ct, n as u64)?;
            ensure!(deg == g.degree(v) as u64, "degree mismatch");
            for &(s, pos) in &sorted {
                let u = res.vertex(pos)?;
                if g.has_edge(v, u) {
                    entries += 1;
                    if s as u64 <= deg {
                        violations += 1;
                    }
                }
            }
            if let Some(&u) = res.pick_sorted(&sorted, deg, 1)?.first() {
                answers += 1;
                adjacent += g.has_edge(v, u) as usize;
            }
        }
    }
    let (s3_answers, s3_adjacent) = ctx.slp2_adjacent_answers.unwrap_or((0, 0));
    let detail = format!(
        "{entries} adjacent entries, {violations} not above deg(v); {} answers, {} adjacent",
        answers + s3_answers,
        adjacent + s3_adjacent
    );
    Ok(
        if violations == 0 && adjacent + s3_adjacent == 0 && entries > 0 {
            Verdict::Pass(detail)
        } else {
            Verdict::Fail(detail)
        },
    )
}

// ---------------------------------------------------------------- criterion 6

fn leftmost_argmax(v: &[u64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn c6_mgc(_: &mut Ctx) -> Result<Verdict> {
    let mut rng = ChaCha20Rng::seed_from_u64(606);
    let mut total = 0;
    let mut bad = Vec::new();
    for (ni, n) in [4usize, 7, 8, 16].into_iter().enumerate() {
        for t in 0..125 {
            let w = 6;
            let w_idx = if t % 2 == 0 {
                w
            } else {
                (usize::BITS - (n - 1).leading_zeros()).max(1) as usize
            };
            let modulus = 1u64 << w;
            // Narrow ranges force ties.
            let hi = if t % 3 == 0 { 3 } else { modulus };
            let s: Vec<u64> = (0..n).map(|_| rng.gen_range(0..hi)).collect();
            let adj: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.3)).collect();
            let r: Vec<u64> = (0..n).map(|_| rng.gen_range(0..modulus)).collect();
            let r2: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
            let sbar: Vec<u64> = s.iter().zip(&r).map(|(s, r)| (s + r) % modulus).collect();
            let a: Vec<bool> = adj.iter().zip(&r2).map(|(x, y)| x ^ y).collect();
            let zeroed: Vec<u64> = s
                .iter()
                .zip(&adj)
                .map(|(&s, &x)| if x { 0 } else { s })
                .collect();
            let expected = leftmost_argmax(&zeroed) as u64;

            let mgc = build_mgc(n, w, w_idx)?;
            let ps_in = mgc_ps_inputs(&sbar, &a, w);
            let cs_in = mgc_cs_inputs(&r, &r2, w);
            let simulated = decode_index(&mgc.circuit.simulate(&ps_in, &cs_in)?);
            let (gc, labels) = garble(
                &mgc.circuit,
                &cs_in,
                [n as u32, w as u32, w_idx as u32],
                &mut rng,
            )?;
            let pairs: Vec<(Vec<u8>, Vec<u8>)> = labels
                .ps_pairs
                .iter()
                .map(|(x, y)| (x.to_le_bytes().to_vec(), y.to_le_bytes().to_vec()))
                .collect();
            let (sender, ot1) = OtSender::new(&mut rng);
            let (recv, ot2) = OtReceiver::new(&ot1, &ps_in, &mut rng)?;
            let ot3 = sender.respond(&ot2, &pairs)?;
            let got: Vec<Label> = recv
                .finish(&ot3)?
                .into_iter()
                .map(|b| {
                    Ok(Label::from_le_bytes(
                        b.try_into().map_err(|_| anyhow!("label length"))?,
                    ))
                })
                .collect::<Result<_>>()?;
            let evaluated = decode_index(&evaluate(&gc, &got)?);
            total += 1;
            if evaluated != expected || simulated != expected {
                bad.push(format!(
                    "n={n} case {ni}/{t}: expected {expected} sim {simulated} gc {evaluated}"
                ));
            }
        }
    }
    let detail = format!(
        "{total} vectors over N in {{4,7,8,16}}, {} mismatches",
        bad.len()
    );
    Ok(if bad.is_empty() && total == 500 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}: {bad:?}"))
    })
}

// ---------------------------------------------------------------- criterion 7

fn c7_gate_audit(_: &mut Ctx) -> Result<Verdict> {
    let mut bad = Vec::new();
    let mut check = |what: String, got: (u64, u64), want: (u64, u64)| {
        if got != want {
            bad.push(format!("{what}: got {got:?}, want {want:?}"));
        }
    };
    for w in [1u64, 2, 5, 8, 21, 64] {
        let wu = w as usize;
        check(
            format!("SUB w={w}"),
            build_block(BlockKind::Sub(wu))?.gate_counts(),
            (4 * w, w),
        );
        check(
            format!("COMP w={w}"),
            build_block(BlockKind::Comp(wu))?.gate_counts(),
            (3 * w, w),
        );
        check(
            format!("MUX w={w}"),
            build_block(BlockKind::Mux(wu))?.gate_counts(),
            (2 * w, w),
        );
        check(
            format!("MUL w={w}"),
            build_block(BlockKind::Mul(wu))?.gate_counts(),
            (0, w),
        );
        check(
            format!("NSS w={w}"),
            build_nss(wu)?.gate_counts(),
            (4 * w + 4, 2 * w + 1),
        );
        for v in [MaxVariant::Max1, MaxVariant::Max2, MaxVariant::Max3] {
            check(
                format!("{v:?} w={w}"),
                build_max(v, wu, wu)?.gate_counts(),
                (7 * w, 3 * w),
            );
        }
        check(
            format!("Max4 w={w}"),
            build_max(MaxVariant::Max4, wu, wu)?.gate_counts(),
            (0, 0),
        );
    }
    check(
        "SUB'".into(),
        build_block(BlockKind::SubP)?.gate_counts(),
        (4, 1),
    );

    let large = audit_counts(1000, 257, 257);
    check(
        "approximation N=1000 w=257".into(),
        large.approx,
        (2_831_000, 1_286_000),
    );

    for (n, w, w_idx) in [
        (1usize, 4usize, 4usize),
        (2, 3, 3),
        (7, 5, 5),
        (16, 9, 4),
        (33, 21, 21),
        (100, 257, 257),
    ] {
        let mgc = build_mgc(n, w, w_idx)?;
        let traversal = mgc.circuit.gate_counts();
        let blocks = mgc
            .blocks
            .iter()
            .fold((0, 0), |acc, b| (acc.0 + b.xor, acc.1 + b.and));
        let closed = audit_counts(n as u64, w as u64, w_idx as u64).total;
        check(
            format!("MGC N={n} w={w} w_idx={w_idx} traversal"),
            traversal,
            closed,
        );
        check(
            format!("MGC N={n} w={w} w_idx={w_idx} block sum"),
            blocks,
            closed,
        );
        let nss = mgc.count_blocks(BlockRecordKind::Nss) as u64;
        check(
            format!("MGC N={n} NSS block count"),
            (nss, 0),
            (n as u64, 0),
        );
    }
    let detail = format!(
        "block forms, N=1000 w=257 approx = ({}, {}), exact totals vs traversal; {} mismatches",
        large.approx.0,
        large.approx.1,
        bad.len()
    );
    Ok(if bad.is_empty() {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}: {bad:?}"))
    })
}

// ---------------------------------------------------------------- criterion 8

fn c8_basic_queries(ctx: &mut Ctx) -> Result<Verdict> {
    let mut rng = ChaCha20Rng::seed_from_u64(808);
    let mut bad = Vec::new();
    let mut probes = 0;
    for gi in 0..10 {
        let g = random_graph(&mut rng, &[6, 12, 24, 40], &[0.1, 0.3, 0.6], gi);
        let variant = VARIANTS[gi % 3];
        let mut d = Deployment::start(&ctx.keys, variant, g.n(), DEFAULT_R_MAX, 800 + gi as u64)?;
        d.s().upload(&g)?;
        for _ in 0..20 {
            let v = rng.gen_range(0..g.n());
            probes += 1;
            match rng.gen_range(0..3) {
                0 => {
                    let got = d.s().neighbors(v)?;
                    if got != g.neighbors(v) {
                        bad.push(format!("graph#{gi} neighbors({v}) = {got:?}"));
                    }
                }
                1 => {
                    let got = d.s().degree(v)?;
                    if got != g.degree(v) as u64 {
                        bad.push(format!("graph#{gi} degree({v}) = {got}"));
                    }
                }
                _ => {
                    let u = rng.gen_range(0..g.n());
                    let got = d.s().adjacency(v, u)?;
                    if got != g.has_edge(v, u) {
                        bad.push(format!("graph#{gi} adjacent({v},{u}) = {got}"));
                    }
                }
            }
        }
        d.finish()?;
    }
    let detail = format!("{probes} probes over 10 graphs, {} mismatches", bad.len());
    Ok(if bad.is_empty() && probes == 200 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}: {bad:?}"))
    })
}

// ---------------------------------------------------------------- criterion 9

/// Independent recount: vertex ids, raw lines and the prefix edge set.
struct Recount {
    raw_lines: usize,
    ids: BTreeSet<u64>,
    prefix_edges: BTreeSet<(u64, u64)>,
}

fn recount(path: &std::path::Path, k: u64) -> Result<Recount> {
    let f = std::fs::File::open(path)?;
    let mut rc = Recount {
        raw_lines: 0,
        ids: BTreeSet::new(),
        prefix_edges: BTreeSet::new(),
    };
    for line in BufReader::new(f).lines() {
        let line = line?;
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace().map(|t| t.parse::<u64>());
        let (u, v) = match (it.next(), it.next()) {
            (Some(Ok(u)), Some(Ok(v))) => (u, v),
            _ => bail!("bad line {line:?}"),
        };
        rc.raw_lines += 1;
        rc.ids.insert(u);
        rc.ids.insert(v);
        if u < k && v < k && u != v {
            rc.prefix_edges.insert((u.min(v), u.max(v)));
        }
    }
    Ok(rc)
}

fn c9_dataset(_: &mut Ctx) -> Result<Verdict> {
    let path = data_dir().join(EMAIL_EU_CORE);
    if !path.exists() {
        return Ok(Verdict::Unavailable(format!(
            "{} not found (set SLP_DATA_DIR to the directory holding the SNAP edge list)",
            path.display()
        )));
    }
    let (full, stats) = load_graph(&path, None)?;
    let stats = stats.context("edge list expected")?;
    let (prefix, pstats) = load_graph(&path, Some(1000))?;
    let pstats = pstats.context("edge list expected")?;
    let rc = recount(&path, 1000)?;
    let mut bad = Vec::new();
    if full.n() != 1005 || rc.ids.len() != 1005 {
        bad.push(format!(
            "N = {} (recount {}), want 1005",
            full.n(),
            rc.ids.len()
        ));
    }
    if stats.raw_edge_lines != 25_571 || rc.raw_lines != 25_571 {
        bad.push(format!(
            "raw edge lines = {} (recount {}), want 25571",
            stats.raw_edge_lines, rc.raw_lines
        ));
    }
    if prefix.n() != 1000 {
        bad.push(format!("prefix N = {}", prefix.n()));
    }
    let loaded: BTreeSet<(u64, u64)> = (0..prefix.n())
        .flat_map(|u| {
            prefix
                .neighbors(u)
                .into_iter()
                .filter(move |&v| v > u)
                .map(move |v| (u as u64, v as u64))
        })
        .collect();
    if loaded != rc.prefix_edges || pstats.undirected_edges != rc.prefix_edges.len() {
        bad.push(format!(
            "prefix edges {} vs recount {}",
            loaded.len(),
            rc.prefix_edges.len()
        ));
    }
    let detail = format!(
        "N={} raw_lines={} directed={} undirected={} self_loops={}; prefix K=1000: N={} undirected={}",
        full.n(),
        stats.raw_edge_lines,
        stats.directed_edges,
        stats.undirected_edges,
        stats.self_loops,
        prefix.n(),
        pstats.undirected_edges
    );
    Ok(if bad.is_empty() {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}: {bad:?}"))
    })
}

// ---------------------------------------------------------------- criterion 10

fn c10_scaling(_: &mut Ctx) -> Result<Verdict> {
    let densities = vec![0.1, 0.3, 0.6];
    let grid = BenchGrid {
        ns: vec![50, 100, 150, 200],
        densities: densities.clone(),
        variant: Variant::I,
        lambda_bits: LAMBDA_BITS,
        r_max: DEFAULT_R_MAX,
        seed: 10,
        repeats: 5,
        threads: Some(1),
    };
    let recs = bench(&grid)?;
    let enc: Vec<_> = recs.iter().filter(|r| r.phase == Phase::Encrypt).collect();
    let time = |n: usize, d: f64| -> f64 {
        enc.iter()
            .find(|r| r.n == n && r.density == d)
            .map(|r| r.wall.as_secs_f64())
            .unwrap_or(f64::NAN)
    };
    let mut exps = Vec::new();
    for &d in &densities {
        let xs: Vec<f64> = grid.ns.iter().map(|&n| n as f64).collect();
        let ys: Vec<f64> = grid.ns.iter().map(|&n| time(n, d)).collect();
        exps.push(fit_power_law(&xs, &ys).0);
    }
    let mut worst_spread: f64 = 0.0;
    for &n in &grid.ns {
        let ts: Vec<f64> = densities.iter().map(|&d| time(n, d)).collect();
        let mean = ts.iter().sum::<f64>() / ts.len() as f64;
        for t in ts {
            worst_spread = worst_spread.max((t / mean - 1.0).abs());
        }
    }
    let exps_ok = exps.iter().all(|k| (k - 2.0).abs() <= 0.3);
    let cells: Vec<String> = grid
        .ns
        .iter()
        .map(|&n| {
            let ts: Vec<String> = densities
                .iter()
                .map(|&d| format!("{:.0}", time(n, d) * 1e3))
                .collect();
            format!("N={n}:{}ms", ts.join("/"))
        })
        .collect();
    let detail = format!(
        "exponents {:?} (2.0 +/- 0.3), worst density deviation {:.1}% (10%); {}",
        exps.iter().map(|k| format!("{k:.3}")).collect::<Vec<_>>(),
        worst_spread * 100.0,
        cells.join(" ")
    );
    Ok(if exps_ok && worst_spread <= 0.10 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    })
}

// ---------------------------------------------------------------- criterion 11

fn bytes(log: &[TrafficEntry], from: Role, to: Role, tag: Option<Tag>) -> usize {
    log.iter()
        .filter(|e| e.from == from && e.to == to && tag.is_none_or(|t| e.tag == t))
        .map(|e| e.bytes)
        .sum()
}

fn c11_communication(ctx: &mut Ctx) -> Result<Verdict> {
    let pk = ctx.keys.pk();
    let (rg, rg1) = (pk.ct_g_len(), pk.ct_g1_len());
    let mut bad = Vec::new();
    let mut summary = Vec::new();
    let mut gc_blob = [0usize; 2];
    for variant in VARIANTS {
        for (ni, n) in [16usize, 32].into_iter().enumerate() {
            let g = Graph::erdos_renyi(n, 0.3, &mut ChaCha20Rng::seed_from_u64(1100 + n as u64));
            let mut d = Deployment::start(&ctx.keys, variant, n, DEFAULT_R_MAX, 1100)?;
            d.log.clear();
            d.s().upload(&g)?;
            let upload = d.log.entries();
            d.log.clear();
            d.s().link_prediction(n / 2)?;
            let q = d.log.entries();
            d.finish()?;

            let mut want = |what: &str, got: usize, exp: usize| {
                if got != exp {
                    bad.push(format!("{variant} N={n} {what}: {got} != {exp}"));
                }
            };
            let up = bytes(&upload, Role::Client, Role::Cs, None);
            let up_exp = 13
                + n * n * rg
                + if variant == Variant::II {
                    13 + n * n * rg1
                } else {
                    0
                };
            want("client->cs upload", up, up_exp);
            let cs_ps = bytes(&q, Role::Cs, Role::Ps, None);
            let ps_c = bytes(&q, Role::Ps, Role::Client, None);
            match variant {
                Variant::I => {
                    want("cs->ps", cs_ps, 13 + n * rg1 + 9 + n * rg);
                    want("ps->client", ps_c, 14);
                }
                Variant::II => {
                    want("cs->ps", cs_ps, 13 + n * rg1);
                    want(
                        "cs->client degree",
                        bytes(&q, Role::Cs, Role::Client, Some(Tag::DegreeII)),
                        6 + rg,
                    );
                    want("ps->client sorted list", ps_c, 9 + 8 * n);
                }
                Variant::III => {
                    let scores = bytes(&q, Role::Cs, Role::Ps, Some(Tag::ScoresIII));
                    want("cs->ps scores", scores, 13 + n * (rg + rg1));
                    gc_blob[ni] = bytes(&q, Role::Cs, Role::Ps, Some(Tag::GcBlob));
                    want("ps->client", ps_c, 14);
                }
            }
            summary.push(format!(
                "{variant} N={n}: upload={up} cs->ps={cs_ps} ps->client={ps_c}"
            ));
        }
    }
    // The garbled circuit grows linearly in N (times the score width).
    if !(gc_blob[1] > gc_blob[0] * 19 / 10 && gc_blob[1] < gc_blob[0] * 3) {
        bad.push(format!("GC blob sizes {gc_blob:?} not linear-shaped"));
    }
    let detail = format!(
        "rho_G={rg} rho_G1={rg1}; {}; GC blob {gc_blob:?}",
        summary.join("; ")
    );
    Ok(if bad.is_empty() {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}: {bad:?}"))
    })
}

// ---------------------------------------------------------------- driver

type Criterion = fn(&mut Ctx) -> Result<Verdict>;

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let criteria: [(usize, Criterion); 11] = [
        (1, c1_bgn),
        (2, c2_bilinearity),
        (3, c3_oracle_equivalence),
        (4, c4_cross_variant),
        (5, c5_slp2_elimination),
        (6, c6_mgc),
        (7, c7_gate_audit),
        (8, c8_basic_queries),
        (9, c9_dataset),
        (10, c10_scaling),
        (11, c11_communication),
    ];
    let keys = match ClientKeys::generate(LAMBDA_BITS, &mut ChaCha20Rng::seed_from_u64(2024)) {
        Ok(k) => k,
        Err(e) => {
            println!("acceptance: key generation failed: {e}");
            return ExitCode::FAILURE;
        }
    };
    let mut ctx = Ctx {
        keys,
        slp2_adjacent_answers: None,
    };
    let (mut pass, mut fail, mut unavailable) = (0, 0, 0);
    for (id, f) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let verdict = f(&mut ctx).unwrap_or_else(|e| Verdict::Fail(format!("error: {e:#}")));
        let secs = Duration::as_secs_f64(&start.elapsed());
        match verdict {
            Verdict::Pass(d) => {
                pass += 1;
                println!("criterion {id}: PASS {d} [{secs:.1}s]");
            }
            Verdict::Fail(d) => {
                fail += 1;
                println!("criterion {id}: FAIL {d} [{secs:.1}s]");
            }
            Verdict::Unavailable(d) => {
                unavailable += 1;
                println!("criterion {id}: FAIL input unavailable: {d} [{secs:.1}s]");
            }
        }
    }
    println!(
        "acceptance: {pass} passed, {fail} failed, {unavailable} failed for missing input data"
    );
    if fail > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
