//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use twnet::covers::{build_partition_cover, build_sparse_cover};
use twnet::decomposition::{PaddedParams, TruncatedExp};
use twnet::fixtures::{standard_fixtures, Fixture};
use twnet::net::{build_tree_ordered_net, construct_cores};
use twnet::tree::td_to_tree_partition;
use twnet::verify::{
    verify_cores, verify_embedding, verify_net, verify_oracle_equivalence, verify_padding, verify_partition,
    verify_partition_cover, verify_sparse_cover, Metric, OracleNetDistances, Status, VerificationReport,
};
use twnet::Pipeline;

const ALPHA: f64 = 3.0;
const TOL: f64 = 1e-9;
const SEEDS: u64 = 100;
const TRIALS: u64 = 10_000;
const SUBGRAPHS: u64 = 200;
const SUBGRAPH_CAP: usize = 60;
const KS_DRAWS: usize = 100_000;
const KS_CRITICAL_1PCT: f64 = 1.6276;

struct Outcome {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn require(&mut self, fixture: &str, report: &VerificationReport, names: &[&str]) {
        for name in names {
            match report.get(name) {
                None => self.failures.push(format!("{fixture}: check {name} missing")),
                Some(c) if c.status == Status::Fail => {
                    self.failures.push(format!("{fixture}: {name} failed ({})", c.witness.as_deref().unwrap_or("")))
                }
                Some(_) => {}
            }
        }
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(msg());
        }
    }

    fn time_limit(&mut self, what: &str, took: Duration, limit: Duration) {
        self.check(took <= limit, || format!("{what} took {took:?}, limit {limit:?}"));
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * b.abs().max(1.0)
}

fn criterion1(fx: &[Fixture]) -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    o.check(fx.len() >= 20, || format!("only {} fixtures", fx.len()));
    for f in fx {
        let emb = match td_to_tree_partition(&f.graph, &f.td) {
            Ok(e) => e,
            Err(e) => {
                o.failures.push(format!("{}: {e}", f.name));
                continue;
            }
        };
        let metric = Metric::compute(&f.graph, SUBGRAPH_CAP);
        let r = verify_embedding(&f.graph, &f.td, &emb, &metric);
        o.require(&f.name, &r, &["td.valid", "tp.partition", "tp.edges", "embedding.isometry", "embedding.copies"]);
        let w = emb.width_report(&f.td);
        o.check(w.tp_max_bag_size == w.td_max_bag_size, || {
            format!("{}: host bag size {} vs decomposition bag size {}", f.name, w.tp_max_bag_size, w.td_max_bag_size)
        });
    }
    let took = start.elapsed();
    o.time_limit("conversion", took, Duration::from_secs(10));
    o.notes.push(format!("{} fixtures in {took:.2?}", fx.len()));
    o
}

fn criterion2(fx: &[Fixture]) -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let mut max_rounds = 0;
    for f in fx {
        let emb = td_to_tree_partition(&f.graph, &f.td).expect("conversion");
        let cc = construct_cores(&emb.host, &emb.partition, f.delta).expect("cores");
        let r = verify_cores(&emb.host, &emb.partition, &cc, f.delta);
        o.require(
            &f.name,
            &r,
            &[
                "cores.cover",
                "cores.same-rank-disjoint",
                "cores.rounds",
                "cores.vertex-multiplicity",
                "cores.bag-multiplicity",
                "cores.attachments",
                "cores.hierarchy",
            ],
        );
        max_rounds = max_rounds.max(cc.cores.iter().map(|c| c.rank).max().unwrap_or(0));
    }
    let took = start.elapsed();
    o.time_limit("core construction", took, Duration::from_secs(30));
    o.notes.push(format!("max rounds {max_rounds}, {took:.2?}"));
    o
}

fn criterion3(fx: &[Fixture]) -> Outcome {
    let mut o = Outcome::new();
    let mut slowest = Duration::ZERO;
    let mut worst = (0.0f64, 0.0f64, 0usize);
    for f in fx {
        let start = Instant::now();
        let emb = td_to_tree_partition(&f.graph, &f.td).expect("conversion");
        let nb = build_tree_ordered_net(&emb.host, &emb.partition, f.delta, ALPHA).expect("net");
        let r = verify_net(&emb.host, &nb.net, Some(&nb.semi), f.delta, 0);
        slowest = slowest.max(start.elapsed());
        o.require(
            &f.name,
            &r,
            &["net.injective", "net.validity", "net.refines-semi", "net.unique-maximum", "net.covering", "net.packing-2delta", "net.tau"],
        );
        let tp = emb.partition.width();
        let bound = tp.pow(4) + tp.pow(2);
        o.check(nb.net.params.tau_bound == bound, || format!("{}: tau bound {} for tp {tp}", f.name, nb.net.params.tau_bound));
        let m = |n: &str| r.get(n).and_then(|c| c.measured).unwrap_or(f64::NAN);
        worst = (worst.0.max(m("net.packing-2delta")), worst.1.max(m("net.packing-3delta")), worst.2.max(nb.net.params.tau_emp));
    }
    o.time_limit("slowest net build", slowest, Duration::from_secs(60));
    o.notes.push(format!(
        "max packing 2Δ {} 3Δ {} αΔ {}, slowest {slowest:.2?}",
        worst.0, worst.1, worst.2
    ));
    o
}

fn criterion4(ps: &[(String, Pipeline)]) -> Outcome {
    let mut o = Outcome::new();
    let mut worst_margin = f64::INFINITY;
    for (name, p) in ps {
        let start = Instant::now();
        let metric = Metric::compute(&p.graph, SUBGRAPH_CAP);
        let sampler = p.sampler().expect("sampler");
        let params = sampler.params().clone();
        let tau = p.net().params.tau_emp as f64;
        o.check(close(params.delta_param, 1.0 / 16.0), || format!("{name}: δ = {}", params.delta_param));
        o.check(close(params.padding_parameter, 32.0 * (2.0 * tau).ln()), || {
            format!("{name}: padding parameter {}", params.padding_parameter)
        });
        o.check(close(params.diameter_bound, 4.0 * p.delta), || format!("{name}: diameter bound {}", params.diameter_bound));

        let failures: Vec<String> = (0..SEEDS)
            .into_par_iter()
            .filter_map(|s| {
                let g = match p.sample(&sampler, s) {
                    Ok((_, g)) => g,
                    Err(e) => return Some(format!("{name} seed {s}: {e}")),
                };
                let r = verify_partition(&g, &metric);
                r.has_failures().then(|| format!("{name} seed {s}: {:?}", r.failures()))
            })
            .collect();
        o.failures.extend(failures);

        let dp = params.delta_param;
        let est = p
            .padding_estimate(&sampler, &[dp / 4.0, dp / 2.0, dp], TRIALS, 0)
            .expect("estimate");
        for e in &est {
            let required = (-32.0 * (2.0 * tau).ln() * e.gamma).exp();
            o.check(close(e.required, required), || format!("{name}: required {} vs {required}", e.required));
            worst_margin = worst_margin.min(e.lower_bound - required);
        }
        let r = verify_padding(&est);
        o.require(name, &r, &r.checks.iter().map(|c| c.name.as_str()).collect::<Vec<_>>());
        o.time_limit(name, start.elapsed(), Duration::from_secs(300));
    }
    o.notes.push(format!("{} fixtures × {SEEDS} seeds, smallest Wilson margin {worst_margin:.4}", ps.len()));
    o
}

fn criterion5(ps: &[(String, Pipeline)]) -> Outcome {
    let mut o = Outcome::new();
    for (name, p) in ps {
        let metric = Metric::compute(&p.graph, SUBGRAPH_CAP);
        let host_cover = build_sparse_cover(p.host(), p.net(), p.delta).expect("cover");
        let cover = host_cover.project(&p.embedding);
        let g = &cover.guarantees;
        o.check(close(g.padding_ratio, 6.0), || format!("{name}: padding ratio {}", g.padding_ratio));
        o.check(close(g.diameter_bound, 6.0 * p.delta), || format!("{name}: diameter bound {}", g.diameter_bound));
        o.check(close(g.padding_radius, p.delta), || format!("{name}: padding radius {}", g.padding_radius));
        let od = OracleNetDistances::compute(p.host(), p.net(), &p.net().net);
        let packing = od.counts(3.0 * p.delta);
        let r = verify_sparse_cover(&p.graph, &cover, &metric, Some(&packing), Some((p.host(), &host_cover)));
        o.require(name, &r, &["cover.covers", "cover.strong-diameter", "cover.sparsity", "cover.padding"]);
    }
    o.notes.push(format!("{} fixtures", ps.len()));
    o
}

fn criterion6(ps: &[(String, Pipeline)]) -> Outcome {
    let mut o = Outcome::new();
    let mut warned = Vec::new();
    for (name, p) in ps {
        let metric = Metric::compute(&p.graph, SUBGRAPH_CAP);
        let host_cover = build_partition_cover(p.host(), p.net(), p.delta).expect("partition cover");
        let pc = host_cover.project(&p.embedding);
        let g = &pc.guarantees;
        o.check(close(g.padding_ratio, 12.0), || format!("{name}: padding ratio {}", g.padding_ratio));
        o.check(close(g.diameter_bound, 3.0 * p.delta), || format!("{name}: diameter bound {}", g.diameter_bound));
        o.check(close(g.padding_radius, p.delta / 4.0), || format!("{name}: padding radius {}", g.padding_radius));
        o.check(g.tau == p.net().params.tau_emp, || format!("{name}: tau {} vs {}", g.tau, p.net().params.tau_emp));
        let r = verify_partition_cover(&p.graph, &pc, &metric, Some((p.host(), &host_cover)));
        o.require(
            name,
            &r,
            &["pcover.count", "pcover.partitions", "pcover.weak-diameter", "pcover.strong-diameter", "pcover.padding"],
        );
        if r.status("pcover.count") == Some(Status::Warn) {
            warned.push(name.clone());
        }
    }
    o.notes.push(format!("{} fixtures, count warnings {:?}", ps.len(), warned));
    o
}

fn criterion7(fx: &[Fixture]) -> Outcome {
    let mut o = Outcome::new();
    let failures: Vec<String> = (0..SUBGRAPHS)
        .into_par_iter()
        .filter_map(|s| {
            let f = &fx[s as usize % fx.len()];
            let r = verify_oracle_equivalence(&f.graph, 1, SUBGRAPH_CAP, 1000 + s);
            r.has_failures().then(|| format!("{}: {:?}", f.name, r.failures()))
        })
        .collect();
    o.failures.extend(failures);
    o.notes.push(format!("{SUBGRAPHS} induced subgraphs"));
    o
}

/// `F(y) = (1 - e^{-λ(y-θ1)}) / (1 - e^{-λ(θ2-θ1)})` on the support.
fn texp_cdf(y: f64, t1: f64, t2: f64, lambda: f64) -> f64 {
    if y <= t1 {
        return 0.0;
    }
    if y >= t2 {
        return 1.0;
    }
    (1.0 - (-lambda * (y - t1)).exp()) / (1.0 - (-lambda * (t2 - t1)).exp())
}

fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

fn criterion8(ps: &[(String, Pipeline)]) -> Outcome {
    let mut o = Outcome::new();
    // radii as the sampler draws them: one stream per center, many seeds
    let (name, p) = ps.iter().max_by_key(|(_, p)| p.net().net.len()).expect("fixtures");
    let sampler = p.sampler().expect("sampler");
    let params = sampler.params().clone();
    let mut draws = Vec::with_capacity(KS_DRAWS);
    let mut seed = 0;
    while draws.len() < KS_DRAWS {
        for (_, r) in sampler.radii(seed) {
            if draws.len() < KS_DRAWS {
                draws.push(r / p.delta);
            }
        }
        seed += 1;
    }
    let beta = (ALPHA + 1.0) / 2.0;
    let lambda = 4.0 / (ALPHA - 1.0) * (2.0 * p.net().params.tau_emp as f64).ln();
    o.check(close(params.lambda, lambda), || format!("λ {} vs {lambda}", params.lambda));
    let d = ks_statistic(draws, |y| texp_cdf(y, 1.0, beta, lambda));
    let crit = KS_CRITICAL_1PCT / (KS_DRAWS as f64).sqrt();
    o.check(d <= crit, || format!("KS statistic {d:.5} exceeds {crit:.5}"));

    for (t1, t2, l) in [(1.0, 2.0, 0.5), (1.0, 1.5, 8.0), (0.25, 7.0, 40.0), (3.0, 3.0 + 1e-6, 1e-3)] {
        let law = TruncatedExp::new(t1, t2, l).expect("law");
        o.check(law.inverse_cdf(0.0).unwrap() == t1, || format!("F⁻¹(0) ≠ {t1}"));
        o.check(law.inverse_cdf(1.0).unwrap() == t2, || format!("F⁻¹(1) ≠ {t2}"));
    }
    let law = PaddedParams::new(ALPHA, 1.0, 4).expect("params").radius_law();
    o.check(law.theta1 == 1.0 && close(law.theta2, beta), || format!("law support [{}, {}]", law.theta1, law.theta2));
    o.notes.push(format!("{KS_DRAWS} radii from {name}, D = {d:.5}, critical {crit:.5}"));
    o
}

fn render(p: &Pipeline) -> Vec<String> {
    let mut out = vec![serde_json::to_string(&p.build.export()).unwrap()];
    let (h, g) = p.sparse_cover().unwrap();
    out.push(serde_json::to_string(&(&h, &g)).unwrap());
    let (h, g) = p.partition_cover().unwrap();
    out.push(serde_json::to_string(&(&h, &g)).unwrap());
    let s = p.sampler().unwrap();
    for seed in [0, 1, 42, u64::MAX] {
        let (h, g) = p.sample(&s, seed).unwrap();
        out.push(serde_json::to_string(&(&h, &g)).unwrap());
    }
    out
}

fn criterion9(fx: &[Fixture]) -> Outcome {
    let mut o = Outcome::new();
    for f in fx {
        let runs: Vec<Vec<String>> = (0..2)
            .map(|_| render(&Pipeline::new(f.graph.clone(), f.td.clone(), f.delta, ALPHA).unwrap()))
            .collect();
        for (k, label) in ["net", "cover", "partition-cover", "decompose 0", "decompose 1", "decompose 42", "decompose max"]
            .iter()
            .enumerate()
        {
            o.check(runs[0][k] == runs[1][k], || format!("{}: {label} differs between runs", f.name));
        }
        o.check(runs[0][3] != runs[0][4] || f.graph.vertex_count() < 4, || format!("{}: seeds 0 and 1 agree", f.name));
    }
    o.notes.push(format!("{} fixtures", fx.len()));
    o
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let fx = standard_fixtures().expect("fixtures");
    let ps: Vec<(String, Pipeline)> = fx
        .iter()
        .map(|f| (f.name.clone(), Pipeline::new(f.graph.clone(), f.td.clone(), f.delta, ALPHA).expect("pipeline")))
        .collect();

    let criteria: Vec<Criterion> = vec![
        ("isometric conversion", Box::new(|| criterion1(&fx))),
        ("core invariants", Box::new(|| criterion2(&fx))),
        ("tree-ordered net", Box::new(|| criterion3(&fx))),
        ("padded decomposition", Box::new(|| criterion4(&ps))),
        ("sparse cover", Box::new(|| criterion5(&ps))),
        ("partition cover", Box::new(|| criterion6(&ps))),
        ("oracle equivalence", Box::new(|| criterion7(&fx))),
        ("sampler correctness", Box::new(|| criterion8(&ps))),
        ("determinism", Box::new(|| criterion9(&fx))),
    ];
    let mut failed = 0;
    for (i, (label, run)) in criteria.iter().enumerate() {
        let o = run();
        let verdict = if o.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {} ({label}): {}", i + 1, o.notes.join("; "));
        for f in o.failures.iter().take(10) {
            println!("    {f}");
        }
        if !o.failures.is_empty() {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} of {} criteria failed", criteria.len());
        ExitCode::FAILURE
    } else {
        println!("acceptance: all {} criteria passed", criteria.len());
        ExitCode::SUCCESS
    }
}
