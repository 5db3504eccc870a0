//! In-process four-party runtime with FIFO channels, byte/round accounting
//! and analytic LAN/WAN timing.
//!
//! A protocol is written as a choreography: each party's steps run in program
//! order on one thread and exchange data only through [`Session::send`] and
//! [`Session::recv`]. Channels block on empty, so the same session can also
//! be driven from one thread per party.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::io::Write;
use std::sync::{Condvar, Mutex, MutexGuard};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::SplitConfig;
use crate::error::{Error, Result};
use crate::matrix::RealMatrix;
use crate::rng::Rng;

/// Bytes per transmitted element (64-bit reals, no headers).
pub const ELEMENT_BYTES: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartyId {
    Alice,
    Bob,
    Cs,
    Client,
}

impl PartyId {
    pub const ALL: [PartyId; 4] = [PartyId::Alice, PartyId::Bob, PartyId::Cs, PartyId::Client];

    pub fn name(self) -> &'static str {
        match self {
            PartyId::Alice => "alice",
            PartyId::Bob => "bob",
            PartyId::Cs => "cs",
            PartyId::Client => "client",
        }
    }

    /// The other data owner. Panics for the server and the client.
    pub fn peer(self) -> PartyId {
        match self {
            PartyId::Alice => PartyId::Bob,
            PartyId::Bob => PartyId::Alice,
            other => panic!("{other} has no data-owner peer"),
        }
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Preprocess,
    Online,
    Verify,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Preprocess => "preprocess",
            Phase::Online => "online",
            Phase::Verify => "verify",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetProfile {
    /// Bits per second.
    pub bandwidth: f64,
    /// One-way latency in seconds.
    pub latency: f64,
}

impl NetProfile {
    pub const LAN: NetProfile = NetProfile {
        bandwidth: 10.1e9,
        latency: 0.1e-3,
    };
    pub const WAN: NetProfile = NetProfile {
        bandwidth: 300e6,
        latency: 40e-3,
    };

    pub fn new(bandwidth: f64, latency: f64) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::usage(format!(
                "bandwidth must be positive, got {bandwidth}"
            )));
        }
        if !(latency.is_finite() && latency >= 0.0) {
            return Err(Error::usage(format!(
                "latency must be non-negative, got {latency}"
            )));
        }
        Ok(Self { bandwidth, latency })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CommMetrics {
    pub bytes_sent: u64,
    /// Directed message transmissions.
    pub rounds: u64,
    /// Wall-clock seconds spent inside each phase.
    pub phase_times: BTreeMap<Phase, f64>,
}

impl CommMetrics {
    /// `rounds * latency + bits / bandwidth`, without local compute time.
    pub fn network_time(&self, profile: &NetProfile) -> f64 {
        self.rounds as f64 * profile.latency + (self.bytes_sent * 8) as f64 / profile.bandwidth
    }

    /// Network time plus the measured local phase times.
    pub fn simulate_time(&self, profile: &NetProfile) -> f64 {
        self.network_time(profile) + self.phase_times.values().sum::<f64>()
    }

    /// Counter increase since `earlier`, a snapshot of the same session.
    pub fn since(&self, earlier: &CommMetrics) -> CommMetrics {
        let mut phase_times = BTreeMap::new();
        for (phase, &t) in &self.phase_times {
            let before = earlier.phase_times.get(phase).copied().unwrap_or(0.0);
            phase_times.insert(*phase, t - before);
        }
        CommMetrics {
            bytes_sent: self.bytes_sent - earlier.bytes_sent,
            rounds: self.rounds - earlier.rounds,
            phase_times,
        }
    }
}

pub fn simulate_time(metrics: &CommMetrics, profile: &NetProfile) -> f64 {
    metrics.simulate_time(profile)
}

/// One send, as seen by observers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub from: PartyId,
    pub to: PartyId,
    /// Protocol instance and step, e.g. `s2prip#3/vf_a`.
    pub tag: String,
    pub shape: Vec<(usize, usize)>,
    pub bytes: u64,
    pub phase: Phase,
}

#[derive(Debug, Clone)]
pub struct Message {
    pub tag: String,
    pub payload: Vec<RealMatrix>,
}

/// Metadata handed to a tamper hook.
#[derive(Debug, Clone)]
pub struct MessageInfo {
    pub from: PartyId,
    pub to: PartyId,
    pub tag: String,
    pub phase: Phase,
    /// Zero-based index of this send within the session.
    pub seq: u64,
}

/// Mutates payloads in transit, after they have been accounted. Used to
/// exercise verification.
pub type TamperHook = Box<dyn FnMut(&MessageInfo, &mut [RealMatrix]) + Send>;

#[derive(Default)]
struct State {
    queues: BTreeMap<(PartyId, PartyId), VecDeque<Message>>,
    metrics: CommMetrics,
    transcript: Vec<TranscriptRecord>,
    phase: Option<Phase>,
    closed: bool,
    instances: u64,
}

/// Label of one protocol invocation; seeds each party's stream for it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub label: String,
}

impl Instance {
    pub fn tag(&self, step: &str) -> String {
        format!("{}/{}", self.label, step)
    }
}

pub struct Session {
    cfg: SplitConfig,
    state: Mutex<State>,
    arrived: Condvar,
    tamper: Mutex<Option<TamperHook>>,
}

impl fmt::Debug for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Session")
            .field("cfg", &self.cfg)
            .field("metrics", &self.metrics())
            .finish()
    }
}

impl Session {
    pub fn new(cfg: SplitConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            state: Mutex::new(State::default()),
            arrived: Condvar::new(),
            tamper: Mutex::new(None),
        })
    }

    pub fn cfg(&self) -> &SplitConfig {
        &self.cfg
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn set_tamper(&self, hook: TamperHook) {
        *self.tamper.lock().unwrap_or_else(|e| e.into_inner()) = Some(hook);
    }

    pub fn clear_tamper(&self) {
        *self.tamper.lock().unwrap_or_else(|e| e.into_inner()) = None;
    }

    /// Allocates a fresh protocol instance label.
    pub fn instance(&self, protocol: &str) -> Instance {
        let mut st = self.lock();
        st.instances += 1;
        Instance {
            label: format!("{protocol}#{}", st.instances),
        }
    }

    /// `party`'s private stream for `instance`.
    pub fn rng(&self, instance: &Instance, party: PartyId) -> Rng {
        Rng::derive(self.cfg.seed, &format!("{}/{}", instance.label, party))
    }

    /// Runs `f` with the session in `phase` and adds its wall time to that
    /// phase. Must not be nested.
    pub fn in_phase<T>(&self, phase: Phase, f: impl FnOnce() -> T) -> T {
        let previous = self.lock().phase.replace(phase);
        debug_assert!(previous.is_none(), "phase {phase} nested in {previous:?}");
        let start = Instant::now();
        let out = f();
        let elapsed = start.elapsed().as_secs_f64();
        let mut st = self.lock();
        st.phase = previous;
        *st.metrics.phase_times.entry(phase).or_insert(0.0) += elapsed;
        out
    }

    pub fn send(
        &self,
        from: PartyId,
        to: PartyId,
        tag: impl Into<String>,
        payload: Vec<RealMatrix>,
    ) -> Result<()> {
        if from == to {
            return Err(Error::usage(format!("{from} cannot send to itself")));
        }
        if to == PartyId::Cs {
            return Err(Error::usage(format!(
                "{from} cannot send to the commodity server"
            )));
        }
        let tag = tag.into();
        let mut payload = payload;
        let info = {
            let mut st = self.lock();
            if st.closed {
                return Err(Error::ProtocolAbort("send on closed session".into()));
            }
            let phase = st.phase.unwrap_or(Phase::Online);
            if from == PartyId::Cs && phase != Phase::Preprocess {
                return Err(Error::usage(format!(
                    "the commodity server may only send during preprocessing, not {phase}"
                )));
            }
            let elements: usize = payload.iter().map(RealMatrix::len).sum();
            let bytes = elements as u64 * ELEMENT_BYTES;
            let seq = st.metrics.rounds;
            st.metrics.bytes_sent += bytes;
            st.metrics.rounds += 1;
            st.transcript.push(TranscriptRecord {
                from,
                to,
                tag: tag.clone(),
                shape: payload.iter().map(RealMatrix::shape).collect(),
                bytes,
                phase,
            });
            MessageInfo {
                from,
                to,
                tag: tag.clone(),
                phase,
                seq,
            }
        };
        if let Some(hook) = self
            .tamper
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .as_mut()
        {
            hook(&info, &mut payload);
        }
        let mut st = self.lock();
        st.queues
            .entry((from, to))
            .or_default()
            .push_back(Message { tag, payload });
        self.arrived.notify_all();
        Ok(())
    }

    /// Oldest undelivered message from `from` to `at`. Blocks while the
    /// channel is empty and the session open.
    pub fn recv(&self, at: PartyId, from: PartyId) -> Result<Message> {
        let mut st = self.lock();
        loop {
            if let Some(msg) = st.queues.get_mut(&(from, at)).and_then(VecDeque::pop_front) {
                return Ok(msg);
            }
            if st.closed {
                return Err(Error::ProtocolAbort(format!(
                    "{at} waiting on {from}: session closed"
                )));
            }
            st = self.arrived.wait(st).unwrap_or_else(|e| e.into_inner());
        }
    }

    /// Receives a message and checks it carries exactly `count` matrices.
    pub fn recv_matrices(
        &self,
        at: PartyId,
        from: PartyId,
        count: usize,
    ) -> Result<Vec<RealMatrix>> {
        let msg = self.recv(at, from)?;
        if msg.payload.len() != count {
            return Err(Error::ProtocolAbort(format!(
                "{at} expected {count} matrices from {from} in {}, got {}",
                msg.tag,
                msg.payload.len()
            )));
        }
        Ok(msg.payload)
    }

    pub fn recv_one(&self, at: PartyId, from: PartyId) -> Result<RealMatrix> {
        Ok(self.recv_matrices(at, from, 1)?.pop().expect("one matrix"))
    }

    /// Wakes every blocked receiver; later receives on empty channels abort.
    pub fn close(&self) {
        self.lock().closed = true;
        self.arrived.notify_all();
    }

    pub fn is_closed(&self) -> bool {
        self.lock().closed
    }

    /// Number of undelivered messages across all channels.
    pub fn pending(&self) -> usize {
        self.lock().queues.values().map(VecDeque::len).sum()
    }

    pub fn metrics(&self) -> CommMetrics {
        self.lock().metrics.clone()
    }

    pub fn transcript(&self) -> Vec<TranscriptRecord> {
        self.lock().transcript.clone()
    }

    /// Writes the transcript as JSON lines.
    pub fn write_transcript(&self, mut out: impl Write) -> Result<()> {
        for rec in self.transcript() {
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}
