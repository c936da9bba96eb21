use rand::Rng;

use super::{sample_features, Scenario, ScenarioSpec};
use crate::error::Result;
use crate::flow_model::{AttackGroup, FlowRecord, Protocol};
use crate::rng::seeded;
use crate::sentinel::SecurityEvent;

const BENIGN_PORTS: [u16; 4] = [80, 443, 53, 22];
/// Below the default `maxretry`, so benign traffic never earns a ban.
const BENIGN_MAX_FAILURES: usize = 2;
const GAP_S: f64 = 10.0;

struct Builder<'a> {
    spec: &'a ScenarioSpec,
    events: Vec<(f64, SecurityEvent)>,
    n_flows: usize,
}

impl Builder<'_> {
    fn flow<R: Rng>(&mut self, rng: &mut R, t: f64, group: AttackGroup, src: &str, dst_port: u16) {
        self.n_flows += 1;
        let protocol = if dst_port == 53 { Protocol::Udp } else { Protocol::Tcp };
        let record = FlowRecord {
            flow_id: format!("flow-{:06}", self.n_flows),
            src_ip: src.to_string(),
            dst_ip: self.spec.events.target_ip.clone(),
            src_port: rng.random_range(32768..=60999),
            dst_port,
            protocol,
            timestamp: t,
            features: sample_features(group, self.spec.noise_level, rng),
            raw_label: Some(group.name().to_string()),
        };
        self.events.push((t, SecurityEvent::flow(t, record)));
    }

    fn push(&mut self, ev: SecurityEvent) {
        self.events.push((ev.timestamp, ev));
    }

    /// Returns the segment end time.
    fn benign(&mut self, t0: f64) -> f64 {
        let p = &self.spec.events;
        let mut rng = seeded(self.spec.seed, 101);
        let steps = (p.benign_duration_s / 2.0).floor().max(1.0) as usize;
        let mut failures = vec![0usize; p.benign_users];
        for s in 0..steps {
            let t = t0 + 2.0 * s as f64;
            let cpu = rng.random_range(20.0..60.0);
            let mem = rng.random_range(30.0..55.0);
            self.push(SecurityEvent::resource(t, cpu, mem));
            let u = s % p.benign_users;
            let user = format!("192.168.1.{}", 10 + u);
            let port = BENIGN_PORTS[rng.random_range(0..BENIGN_PORTS.len())];
            self.flow(&mut rng, t + 0.5, AttackGroup::Benign, &user, port);
            let mut success = true;
            if failures[u] < BENIGN_MAX_FAILURES && rng.random_bool(0.1) {
                failures[u] += 1;
                success = false;
            }
            self.push(SecurityEvent::auth(t + 1.0, user, success));
        }
        t0 + 2.0 * steps as f64
    }

    fn brute_force(&mut self, t0: f64) -> f64 {
        let p = &self.spec.events;
        let mut rng = seeded(self.spec.seed, 102);
        let n = p.brute_force_attempts.max(1);
        let dt = p.brute_force_duration_s / n as f64;
        for i in 0..n {
            let t = t0 + (i as f64 + 0.5 * rng.random::<f64>()) * dt;
            self.push(SecurityEvent::auth(t, p.attacker_ip.clone(), false));
        }
        t0 + p.brute_force_duration_s
    }

    fn port_scan(&mut self, t0: f64) -> f64 {
        let p = self.spec.events.clone();
        let mut rng = seeded(self.spec.seed, 103);
        let n = p.scan_ports.max(1);
        let dt = p.scan_duration_s / n as f64;
        for i in 0..n {
            let t = t0 + (i as f64 + 0.5 * rng.random::<f64>()) * dt;
            self.flow(&mut rng, t, AttackGroup::Other, &p.attacker_ip, 1 + i as u16);
        }
        t0 + p.scan_duration_s
    }

    fn syn_flood(&mut self, t0: f64) -> f64 {
        let p = self.spec.events.clone();
        let mut rng = seeded(self.spec.seed, 104);
        let n = p.flood_flows.max(1);
        let dt = p.flood_duration_s / n as f64;
        for i in 0..n {
            let t = t0 + (i as f64 + 0.5 * rng.random::<f64>()) * dt;
            // Spoofed sources from the benchmarking range.
            let src = format!("198.{}.{}.{}", rng.random_range(18..=19), rng.random_range(0..=255), rng.random_range(1..=254));
            self.flow(&mut rng, t, AttackGroup::Dos, &src, 80);
        }
        // CPU ramps from idle to saturation over the first 40% of the flood.
        let ramp = 0.4 * p.flood_duration_s;
        let samples = p.flood_duration_s.floor() as usize + 1;
        for k in 0..samples {
            let dt = k as f64;
            let level = 35.0 + 63.0 * (dt / ramp).min(1.0);
            let cpu = (level + rng.random_range(-1.0..1.0)).clamp(0.0, 100.0);
            let mem = (40.0 + 45.0 * (dt / ramp).min(1.0)).min(100.0);
            self.push(SecurityEvent::resource(t0 + dt + 0.25, cpu, mem));
        }
        t0 + p.flood_duration_s + 1.0
    }
}

/// Event stream for a scenario spec, timestamps strictly increasing.
pub fn gen_events(spec: &ScenarioSpec) -> Result<Vec<SecurityEvent>> {
    spec.validate()?;
    let mut b = Builder {
        spec,
        events: Vec::new(),
        n_flows: 0,
    };
    let t0 = spec.events.start_time;
    match spec.scenario {
        Scenario::Benign => {
            b.benign(t0);
        }
        Scenario::SshBruteForce => {
            b.brute_force(t0);
        }
        Scenario::PortScan => {
            b.port_scan(t0);
        }
        Scenario::SynFlood => {
            b.syn_flood(t0);
        }
        Scenario::MixedDataset => {
            let t = b.benign(t0) + GAP_S;
            let t = b.port_scan(t) + GAP_S;
            let t = b.brute_force(t) + GAP_S;
            b.syn_flood(t);
        }
    }
    b.events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::with_capacity(b.events.len());
    let mut last = f64::NEG_INFINITY;
    for (_, mut ev) in b.events {
        if ev.timestamp <= last {
            ev.timestamp = last.next_up();
        }
        if let crate::sentinel::EventKind::FlowSeen { flow } = &mut ev.kind {
            flow.timestamp = ev.timestamp;
        }
        last = ev.timestamp;
        out.push(ev);
    }
    Ok(out)
}
