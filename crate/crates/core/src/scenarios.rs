//! Workload generators. Every generator is a pure function of its
//! configuration, the topology and the seed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fabric::{FatTreeTopology, FlowId, NodeId, PortId, RoutingKind};
use crate::net::{FlowKind, FlowSpec};
use crate::sim::{streams, RngStream, SimTime};
use crate::transport::{Cca, UdpSourceConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioKind {
    /// One flow between hosts in different pods; one of its core paths is slow.
    ModelVerification {
        /// Long-path RTT as a multiple of the short one.
        #[serde(default = "default_delay_factor")]
        delay_factor: f64,
    },
    /// Every host sends one flow and receives one; some flows become UDP elephants.
    Permutation {
        #[serde(default)]
        elephant_count: u32,
    },
    Incast { fan_in: u32 },
    /// Permutation without elephants, always routed on a single path.
    SinglePathPermutation,
}

fn default_delay_factor() -> f64 {
    2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(flatten)]
    pub kind: ScenarioKind,
    #[serde(default = "default_flow_size")]
    pub flow_size_bytes: u64,
    /// Flow starts are drawn uniformly from `[0, start_jitter)`.
    #[serde(default)]
    pub start_jitter: SimTime,
    #[serde(default)]
    pub elephant: UdpSourceConfig,
    /// Share of CCA flows reported as the tracked set.
    #[serde(default = "default_tracked_fraction")]
    pub tracked_fraction: f64,
}

fn default_flow_size() -> u64 {
    20_000_000
}

fn default_tracked_fraction() -> f64 {
    0.01
}

impl ScenarioConfig {
    pub fn new(kind: ScenarioKind) -> Self {
        ScenarioConfig {
            kind,
            flow_size_bytes: default_flow_size(),
            start_jitter: SimTime::ZERO,
            elephant: UdpSourceConfig::default(),
            tracked_fraction: default_tracked_fraction(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.flow_size_bytes == 0 {
            return Err(Error::config("flow_size_bytes must be > 0"));
        }
        if !(self.tracked_fraction > 0.0 && self.tracked_fraction <= 1.0) {
            return Err(Error::config(format!(
                "tracked_fraction must lie in (0, 1], got {}",
                self.tracked_fraction
            )));
        }
        self.elephant.validate().map_err(Error::Config)?;
        match self.kind {
            ScenarioKind::ModelVerification { delay_factor } if !(delay_factor > 1.0) => Err(Error::config(
                format!("delay_factor must be > 1, got {delay_factor}"),
            )),
            ScenarioKind::Permutation { elephant_count } if ![0, 1, 2, 3, 6].contains(&elephant_count) => {
                Err(Error::config(format!(
                    "elephant_count must be one of 0, 1, 2, 3, 6; got {elephant_count}"
                )))
            }
            ScenarioKind::Incast { fan_in: 0 } => Err(Error::config("fan_in must be >= 1")),
            _ => Ok(()),
        }
    }

    /// Routing the scenario insists on, overriding the experiment's choice.
    pub fn forced_routing(&self) -> Option<RoutingKind> {
        match self.kind {
            ScenarioKind::SinglePathPermutation => Some(RoutingKind::SinglePath),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            ScenarioKind::ModelVerification { .. } => "model_verification".into(),
            ScenarioKind::Permutation { elephant_count } => format!("permutation_e{elephant_count}"),
            ScenarioKind::Incast { fan_in } => format!("incast_{fan_in}"),
            ScenarioKind::SinglePathPermutation => "single_path_permutation".into(),
        }
    }
}

/// Extra one-way delay on one link, making one core path slow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DelayOverride {
    pub port: PortId,
    pub extra: SimTime,
    /// `(aggregation index, core index)` of the slow path.
    pub core_path: (u32, u32),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scenario {
    pub label: String,
    pub seed: u64,
    pub flows: Vec<FlowSpec>,
    pub delay_override: Option<DelayOverride>,
    /// Congestion probability seen by a round-robin flow, for model verification.
    pub q: Option<f64>,
}

impl Scenario {
    pub fn apply(&self, topo: &mut FatTreeTopology) {
        if let Some(o) = self.delay_override {
            topo.set_extra_delay(o.port, o.extra);
        }
    }
}

pub fn generate(
    cfg: &ScenarioConfig,
    topo: &FatTreeTopology,
    cca: Cca,
    t_short: SimTime,
    seed: u64,
) -> Result<Scenario> {
    cfg.validate()?;
    let mut rng = RngStream::new(seed, streams::SCENARIO);
    let mut scenario = match cfg.kind {
        ScenarioKind::ModelVerification { delay_factor } => {
            gen_model_verification(topo, cca, cfg.flow_size_bytes, t_short, delay_factor, &mut rng)
        }
        ScenarioKind::Permutation { elephant_count } => gen_permutation(topo, cfg, cca, elephant_count, &mut rng)?,
        ScenarioKind::SinglePathPermutation => gen_permutation(topo, cfg, cca, 0, &mut rng)?,
        ScenarioKind::Incast { fan_in } => gen_incast(topo, cca, cfg.flow_size_bytes, fan_in, &mut rng)?,
    };
    if cfg.start_jitter > SimTime::ZERO {
        for f in scenario.flows.iter_mut().filter(|f| !f.is_elephant()) {
            f.start = SimTime(rng.below(cfg.start_jitter.as_ps()));
        }
    }
    scenario.label = cfg.label();
    scenario.seed = seed;
    Ok(scenario)
}

fn cca_flow(id: usize, src: NodeId, dst: NodeId, cca: Cca, size_bytes: u64) -> FlowSpec {
    FlowSpec {
        id: FlowId(id as u32),
        src,
        dst,
        kind: FlowKind::Cca { cca, size_bytes },
        start: SimTime::ZERO,
        tracked: false,
    }
}

pub fn gen_model_verification(
    topo: &FatTreeTopology,
    cca: Cca,
    size_bytes: u64,
    t_short: SimTime,
    delay_factor: f64,
    rng: &mut RngStream,
) -> Scenario {
    let hosts = topo.host_count() as u64;
    let src = NodeId(rng.below(hosts) as u32);
    let src_pod = topo.pod_of(src);
    let dst = loop {
        let d = NodeId(rng.below(hosts) as u32);
        if topo.pod_of(d) != src_pod {
            break d;
        }
    };
    let half = topo.half() as u64;
    let agg = rng.below(half) as u32;
    let core = rng.below(half) as u32;
    let port = topo.core_downlink(agg, core, topo.pod_of(dst));
    let extra = t_short.mul_f64(delay_factor - 1.0);
    let mut flow = cca_flow(0, src, dst, cca, size_bytes);
    flow.tracked = true;
    Scenario {
        label: String::new(),
        seed: 0,
        flows: vec![flow],
        delay_override: Some(DelayOverride { port, extra, core_path: (agg, core) }),
        q: Some(1.0 / topo.path_count(src, dst) as f64),
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    Source,
    Destination,
}

/// Assigns roles to hosts so that every host sends once and receives once.
struct Assignment {
    sends: Vec<Option<NodeId>>,
    receives: Vec<bool>,
}

impl Assignment {
    fn new(n: usize) -> Self {
        Assignment { sends: vec![None; n], receives: vec![false; n] }
    }

    fn free(&self, host: NodeId, role: Role) -> bool {
        match role {
            Role::Source => self.sends[host.0 as usize].is_none(),
            Role::Destination => !self.receives[host.0 as usize],
        }
    }

    fn pair(&mut self, src: NodeId, dst: NodeId) {
        debug_assert!(self.free(src, Role::Source) && self.free(dst, Role::Destination) && src != dst);
        self.sends[src.0 as usize] = Some(dst);
        self.receives[dst.0 as usize] = true;
    }
}

/// Where one elephant must touch the fabric relative to the tracked flow.
#[derive(Clone, Copy)]
enum Placement {
    /// Prefer sending from this leaf, else receiving at it.
    SendFirst(u32),
    /// Prefer receiving at this leaf, else sending from it.
    ReceiveFirst(u32),
}

pub fn gen_permutation(
    topo: &FatTreeTopology,
    cfg: &ScenarioConfig,
    cca: Cca,
    elephant_count: u32,
    rng: &mut RngStream,
) -> Result<Scenario> {
    let n = topo.host_count() as usize;
    if n < 2 * elephant_count as usize + 2 {
        return Err(Error::config(format!("{n} hosts cannot hold {elephant_count} elephants plus a tracked flow")));
    }
    let mut asg = Assignment::new(n);

    // Tracked anchor flow between two pods.
    let s = NodeId(rng.below(n as u64) as u32);
    let d = loop {
        let d = NodeId(rng.below(n as u64) as u32);
        if topo.pod_of(d) != topo.pod_of(s) {
            break d;
        }
    };
    asg.pair(s, d);
    let src_leaf = topo.leaf_of(s);
    let dst_leaf = topo.leaf_of(d);
    let half = topo.half();
    let dst_pod = topo.pod_of(d);
    let other_dst_pod_leaf = {
        let own = dst_leaf - dst_pod * half;
        let mut pick = rng.below(half as u64 - 1) as u32;
        if pick >= own {
            pick += 1;
        }
        dst_pod * half + pick
    };

    let placements: Vec<Placement> = match elephant_count {
        0 => vec![],
        1 => vec![Placement::SendFirst(src_leaf)],
        2 => vec![Placement::SendFirst(src_leaf), Placement::ReceiveFirst(other_dst_pod_leaf)],
        3 => vec![
            Placement::SendFirst(src_leaf),
            Placement::ReceiveFirst(other_dst_pod_leaf),
            Placement::SendFirst(src_leaf),
        ],
        6 => {
            let mut v = vec![Placement::SendFirst(src_leaf); 3];
            v.extend(vec![Placement::ReceiveFirst(dst_leaf); 3]);
            v
        }
        other => return Err(Error::config(format!("unsupported elephant_count {other}"))),
    };

    let mut elephants: Vec<(NodeId, NodeId)> = Vec::new();
    for placement in placements {
        let (leaf, roles) = match placement {
            Placement::SendFirst(l) => (l, [Role::Source, Role::Destination]),
            Placement::ReceiveFirst(l) => (l, [Role::Destination, Role::Source]),
        };
        let fixed = roles.iter().find_map(|&role| {
            topo.hosts_under_leaf(leaf).find(|&h| asg.free(h, role)).map(|h| (h, role))
        });
        let Some((host, role)) = fixed else {
            return Err(Error::config(format!(
                "leaf {leaf} has no free host for elephant placement (radix {})",
                topo.radix_k
            )));
        };
        // The other end: a random host free in the complementary role, off both tracked leaves.
        let other_role = if role == Role::Source { Role::Destination } else { Role::Source };
        let mut candidates: Vec<NodeId> = topo
            .hosts()
            .filter(|&h| h != host && asg.free(h, other_role))
            .filter(|&h| topo.leaf_of(h) != src_leaf && topo.leaf_of(h) != dst_leaf)
            .collect();
        if candidates.is_empty() {
            candidates = topo.hosts().filter(|&h| h != host && asg.free(h, other_role)).collect();
        }
        let Some(&other) = rng.choose(&candidates) else {
            return Err(Error::config("no host left for the far end of an elephant"));
        };
        let (src, dst) = if role == Role::Source { (host, other) } else { (other, host) };
        asg.pair(src, dst);
        elephants.push((src, dst));
    }

    // Remaining hosts form a random bijection without self-loops.
    let sources: Vec<NodeId> = topo.hosts().filter(|&h| asg.free(h, Role::Source)).collect();
    let dests: Vec<NodeId> = topo.hosts().filter(|&h| asg.free(h, Role::Destination)).collect();
    let matched = random_matching(&sources, &dests, rng)?;
    for (src, dst) in matched {
        asg.pair(src, dst);
    }

    let size = cfg.flow_size_bytes;
    let mut flows = vec![cca_flow(0, s, d, cca, size)];
    for src in topo.hosts() {
        if src == s || elephants.iter().any(|&(es, _)| es == src) {
            continue;
        }
        let dst = asg.sends[src.0 as usize].expect("every host sends");
        flows.push(cca_flow(flows.len(), src, dst, cca, size));
    }
    let cca_count = flows.len();
    for &(src, dst) in &elephants {
        flows.push(FlowSpec {
            id: FlowId(flows.len() as u32),
            src,
            dst,
            kind: FlowKind::Udp { source: cfg.elephant.clone() },
            start: SimTime::ZERO,
            tracked: false,
        });
    }
    mark_tracked(topo, &mut flows[..cca_count], cfg.tracked_fraction);
    Ok(Scenario { label: String::new(), seed: 0, flows, delay_override: None, q: None })
}

/// Flow 0 is the anchor; the rest of the tracked set shares its source leaf,
/// then its destination leaf.
fn mark_tracked(topo: &FatTreeTopology, flows: &mut [FlowSpec], fraction: f64) {
    let want = ((flows.len() as f64 * fraction).ceil() as usize).max(1);
    let (s_leaf, d_leaf) = (topo.leaf_of(flows[0].src), topo.leaf_of(flows[0].dst));
    flows[0].tracked = true;
    let mut marked = 1;
    for pass in 0..2 {
        for f in flows.iter_mut().skip(1) {
            if marked >= want {
                return;
            }
            let hit = if pass == 0 { topo.leaf_of(f.src) == s_leaf } else { topo.leaf_of(f.dst) == d_leaf };
            if hit && !f.tracked {
                f.tracked = true;
                marked += 1;
            }
        }
    }
}

/// Uniform random pairing of `sources` to `dests` with no host paired to itself.
fn random_matching(sources: &[NodeId], dests: &[NodeId], rng: &mut RngStream) -> Result<Vec<(NodeId, NodeId)>> {
    assert_eq!(sources.len(), dests.len());
    if sources.is_empty() {
        return Ok(Vec::new());
    }
    let mut perm = dests.to_vec();
    for _ in 0..10_000 {
        rng.shuffle(&mut perm);
        if sources.iter().zip(&perm).all(|(s, d)| s != d) {
            return Ok(sources.iter().copied().zip(perm).collect());
        }
    }
    Err(Error::config("could not build a permutation without self-loops"))
}

pub fn gen_incast(
    topo: &FatTreeTopology,
    cca: Cca,
    size_bytes: u64,
    fan_in: u32,
    rng: &mut RngStream,
) -> Result<Scenario> {
    let n = topo.host_count();
    if fan_in >= n {
        return Err(Error::config(format!("fan_in {fan_in} needs more than {n} hosts")));
    }
    let receiver = NodeId(rng.below(n as u64) as u32);
    let mut others: Vec<NodeId> = topo.hosts().filter(|&h| h != receiver).collect();
    rng.shuffle(&mut others);
    let mut senders: Vec<NodeId> = others[..fan_in as usize].to_vec();
    senders.sort();
    let flows = senders
        .into_iter()
        .enumerate()
        .map(|(i, s)| cca_flow(i, s, receiver, cca, size_bytes))
        .collect();
    Ok(Scenario { label: String::new(), seed: 0, flows, delay_override: None, q: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fabric::build_fat_tree;
    use std::collections::BTreeSet;

    fn topo(k: u32) -> FatTreeTopology {
        build_fat_tree(k, 100_000_000_000, SimTime::from_us(1), 1 << 20, u64::MAX).unwrap()
    }

    fn perm(k: u32, e: u32, seed: u64) -> Scenario {
        let cfg = ScenarioConfig::new(ScenarioKind::Permutation { elephant_count: e });
        generate(&cfg, &topo(k), Cca::LSwift, SimTime::from_us(14), seed).unwrap()
    }

    fn assert_bijection(t: &FatTreeTopology, s: &Scenario) {
        let srcs: BTreeSet<_> = s.flows.iter().map(|f| f.src).collect();
        let dsts: BTreeSet<_> = s.flows.iter().map(|f| f.dst).collect();
        let all: BTreeSet<_> = t.hosts().collect();
        assert_eq!(s.flows.len(), all.len());
        assert_eq!(srcs, all);
        assert_eq!(dsts, all);
        assert!(s.flows.iter().all(|f| f.src != f.dst));
    }

    #[test]
    fn permutations_are_bijections_for_every_elephant_count() {
        for k in [4, 6, 10] {
            let t = topo(k);
            for e in [0, 1, 2, 3, 6] {
                for seed in 0..20 {
                    let s = perm(k, e, seed);
                    assert_bijection(&t, &s);
                    assert_eq!(s.flows.iter().filter(|f| f.is_elephant()).count(), e as usize);
                    assert!(s.flows[0].tracked);
                }
            }
        }
    }

    #[test]
    fn elephants_sit_next_to_the_tracked_flow() {
        let t = topo(6);
        for seed in 0..50 {
            let s = perm(6, 6, seed);
            let anchor = &s.flows[0];
            let (sl, dl) = (t.leaf_of(anchor.src), t.leaf_of(anchor.dst));
            let at = |leaf: u32| {
                s.flows
                    .iter()
                    .filter(|f| f.is_elephant() && (t.leaf_of(f.src) == leaf || t.leaf_of(f.dst) == leaf))
                    .count()
            };
            assert!(at(sl) >= 3, "seed {seed}");
            assert!(at(dl) >= 3, "seed {seed}");
            // Two of the three at the source leaf send from it.
            let sending = s.flows.iter().filter(|f| f.is_elephant() && t.leaf_of(f.src) == sl).count();
            assert!(sending >= 2);

            let one = perm(6, 1, seed);
            let e = one.flows.iter().find(|f| f.is_elephant()).unwrap();
            assert_eq!(t.leaf_of(e.src), t.leaf_of(one.flows[0].src));

            let two = perm(6, 2, seed);
            let dpod = t.pod_of(two.flows[0].dst);
            assert!(two
                .flows
                .iter()
                .any(|f| f.is_elephant() && t.pod_of(f.dst) == dpod && t.leaf_of(f.dst) != t.leaf_of(two.flows[0].dst)));
        }
    }

    #[test]
    fn same_seed_same_placement() {
        assert_eq!(perm(6, 3, 9), perm(6, 3, 9));
        assert_ne!(perm(6, 3, 9).flows, perm(6, 3, 10).flows);
    }

    #[test]
    fn smallest_tree_still_fits_six_elephants() {
        // A radix-4 leaf has two hosts: one free sender slot plus two receiver slots.
        let t = topo(4);
        for seed in 0..30 {
            let s = perm(4, 6, seed);
            assert_bijection(&t, &s);
        }
    }

    #[test]
    fn bad_elephant_count_is_a_config_error() {
        let cfg = ScenarioConfig::new(ScenarioKind::Permutation { elephant_count: 4 });
        let err = generate(&cfg, &topo(6), Cca::Swift, SimTime::from_us(14), 1).unwrap_err();
        assert!(err.is_config(), "{err}");
    }

    #[test]
    fn model_verification_has_one_slow_path() {
        for k in [4, 6, 8, 10, 22] {
            let t = topo(k);
            let cfg = ScenarioConfig::new(ScenarioKind::ModelVerification { delay_factor: 2.0 });
            let s = generate(&cfg, &t, Cca::Swift, SimTime::from_us(14), 3).unwrap();
            let f = &s.flows[0];
            assert_ne!(t.pod_of(f.src), t.pod_of(f.dst));
            let half = (k / 2) as f64;
            assert_eq!(s.q, Some(1.0 / (half * half)));
            let o = s.delay_override.unwrap();
            assert_eq!(o.extra, SimTime::from_us(14));
            let mut t2 = t.clone();
            s.apply(&mut t2);
            assert_eq!(t2.links.iter().filter(|l| l.extra_delay > SimTime::ZERO).count(), 1);
        }
    }

    #[test]
    fn incast_senders_are_distinct() {
        let t = topo(10);
        let cfg = ScenarioConfig::new(ScenarioKind::Incast { fan_in: 50 });
        let s = generate(&cfg, &t, Cca::LSwift, SimTime::from_us(14), 5).unwrap();
        let srcs: BTreeSet<_> = s.flows.iter().map(|f| f.src).collect();
        assert_eq!(srcs.len(), 50);
        let dsts: BTreeSet<_> = s.flows.iter().map(|f| f.dst).collect();
        assert_eq!(dsts.len(), 1);
        assert!(!srcs.contains(dsts.iter().next().unwrap()));
        assert_eq!(s, generate(&cfg, &t, Cca::LSwift, SimTime::from_us(14), 5).unwrap());
        let cfg2 = ScenarioConfig::new(ScenarioKind::Incast { fan_in: 2 });
        assert_eq!(generate(&cfg2, &t, Cca::LSwift, SimTime::from_us(14), 5).unwrap().flows.len(), 2);
        let too_many = ScenarioConfig::new(ScenarioKind::Incast { fan_in: 250 });
        assert!(generate(&too_many, &t, Cca::LSwift, SimTime::from_us(14), 5).is_err());
    }

    #[test]
    fn config_flattens_kind() {
        let cfg: ScenarioConfig =
            toml::from_str("kind = \"permutation\"\nelephant_count = 6\nflow_size_bytes = 2000000").unwrap();
        assert_eq!(cfg.kind, ScenarioKind::Permutation { elephant_count: 6 });
        assert_eq!(cfg.flow_size_bytes, 2_000_000);
        let back: ScenarioConfig = toml::from_str(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
