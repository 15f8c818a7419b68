use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::airtime::{attempt_timing, AttemptTiming};
use crate::error::Result;
use crate::markov::AckPolicy;
use crate::netsim::config::{GatewayPolicy, SimConfig};

/// Receive slot an ACK was sent in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Slot {
    Rs1,
    Rs2,
}

/// One completed frame: acknowledged, or dropped after the last attempt.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameRecord {
    pub run: usize,
    pub device: usize,
    pub frame_counter: u64,
    pub attempts: u32,
    /// First transmission start to ACK end, or to the next frame's start
    /// for dropped frames.
    pub delay_s: f64,
    pub energy_j: f64,
    pub dropped: bool,
    /// Slot of the ACK the gateway sent for each attempt, if any.
    pub slots: Vec<Option<Slot>>,
    pub channels: Vec<usize>,
    pub acks_sent: u32,
    pub start_s: f64,
}

/// Whole-run bookkeeping for one device, warm-up included.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DeviceCounters {
    pub generated: u64,
    pub acked: u64,
    pub dropped: u64,
    pub in_flight: u64,
    pub transmissions: u64,
    /// Seconds of uplink airtime.
    pub airtime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunStats {
    pub run: usize,
    pub seed: u64,
    /// Frames started after the warm-up and completed before the end.
    pub frames: Vec<FrameRecord>,
    pub devices: Vec<DeviceCounters>,
    /// ACKs sent by the gateway per attempt number (after warm-up).
    pub acks_per_attempt: Vec<u64>,
    pub rs1_acks_per_attempt: Vec<u64>,
}

impl RunStats {
    pub fn acked(&self) -> usize {
        self.frames.iter().filter(|f| !f.dropped).count()
    }

    /// Total frame delay over the number of ACKs.
    pub fn delay_per_ack(&self) -> Option<f64> {
        self.per_ack(|f| f.delay_s)
    }

    pub fn energy_per_ack(&self) -> Option<f64> {
        self.per_ack(|f| f.energy_j)
    }

    fn per_ack(&self, value: impl Fn(&FrameRecord) -> f64) -> Option<f64> {
        let acks = self.acked();
        (acks > 0).then(|| self.frames.iter().map(value).sum::<f64>() / acks as f64)
    }
}

#[derive(Debug, Clone, Copy)]
enum Event {
    TxStart(usize),
    TxEnd(usize),
    AckStart(usize),
    Outcome(usize),
}

struct Scheduled {
    time: f64,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Transmission {
    end: f64,
    channel: usize,
    sf: u8,
    collided: bool,
}

struct Attempt {
    tx: usize,
    end: f64,
    ack: Option<(Slot, usize)>,
}

#[derive(Default)]
struct Device {
    open: bool,
    frame_counter: u64,
    attempt: usize,
    frame_start: f64,
    energy: f64,
    last_channel: usize,
    rdc_release: f64,
    slots: Vec<Option<Slot>>,
    channels: Vec<usize>,
    acks_sent: u32,
    current: Option<Attempt>,
}

struct Gateway {
    radio_free_at: f64,
    subband_free_at: f64,
    rs2_free_at: f64,
}

struct Engine<'a> {
    cfg: &'a SimConfig,
    run: usize,
    timing: Vec<AttemptTiming<f64>>,
    sf: Vec<(u8, u8)>,
    rng: ChaCha8Rng,
    queue: BinaryHeap<Scheduled>,
    seq: u64,
    txs: Vec<Transmission>,
    on_air: Vec<Vec<usize>>,
    devices: Vec<Device>,
    gateway: Gateway,
    warmup_end: f64,
    out: RunStats,
}

/// Simulates one run with the given seed.
pub fn run_once(cfg: &SimConfig, run: usize, seed: u64) -> Result<RunStats> {
    cfg.validate()?;
    let radio = cfg.effective_radio();
    let n_max = cfg.mac.max_transmissions;
    let timing = (1..=n_max)
        .map(|n| attempt_timing(&radio, n))
        .collect::<Result<Vec<_>>>()?;
    let sf = (1..=n_max).map(|n| (radio.uplink_sf(n), radio.rs1_sf(n))).collect();
    let a = cfg.mac.device_count;
    let mut engine = Engine {
        cfg,
        run,
        timing,
        sf,
        rng: ChaCha8Rng::seed_from_u64(seed),
        queue: BinaryHeap::new(),
        seq: 0,
        txs: Vec::new(),
        on_air: vec![Vec::new(); cfg.mac.channel_count],
        devices: (0..a).map(|_| Device::default()).collect(),
        gateway: Gateway {
            radio_free_at: 0.0,
            subband_free_at: 0.0,
            rs2_free_at: 0.0,
        },
        warmup_end: cfg.settings.warmup_fraction * cfg.settings.sim_duration,
        out: RunStats {
            run,
            seed,
            frames: Vec::new(),
            devices: vec![DeviceCounters::default(); a],
            acks_per_attempt: vec![0; n_max],
            rs1_acks_per_attempt: vec![0; n_max],
        },
    };
    engine.execute();
    Ok(engine.out)
}

impl Engine<'_> {
    fn schedule(&mut self, time: f64, event: Event) {
        self.seq += 1;
        self.queue.push(Scheduled {
            time,
            seq: self.seq,
            event,
        });
    }

    fn execute(&mut self) {
        let period = self.timing[0].tx / self.cfg.mac.duty_cycle;
        for dev in 0..self.devices.len() {
            let t = self.rng.random_range(0.0..period);
            self.schedule(t, Event::TxStart(dev));
        }
        let end = self.cfg.settings.sim_duration;
        while let Some(next) = self.queue.pop() {
            if next.time > end {
                break;
            }
            let now = next.time;
            match next.event {
                Event::TxStart(dev) => self.tx_start(dev, now),
                Event::TxEnd(dev) => self.tx_end(dev, now),
                Event::AckStart(id) => self.occupy(id, now),
                Event::Outcome(dev) => self.outcome(dev, now),
            }
        }
        for (dev, c) in self.devices.iter().zip(self.out.devices.iter_mut()) {
            c.in_flight = u64::from(dev.open);
        }
    }

    /// Puts a transmission on the air; anything overlapping on the same
    /// channel and SF is destroyed, and so is the newcomer.
    fn occupy(&mut self, id: usize, now: f64) {
        let ch = self.txs[id].channel;
        let sf = self.txs[id].sf;
        let txs = &mut self.txs;
        let list = &mut self.on_air[ch];
        list.retain(|&o| txs[o].end > now);
        for &o in list.iter() {
            if txs[o].sf == sf {
                txs[o].collided = true;
                txs[id].collided = true;
            }
        }
        list.push(id);
    }

    fn tx_start(&mut self, dev: usize, now: f64) {
        let m_c = self.cfg.mac.channel_count;
        let d = &mut self.devices[dev];
        if !d.open {
            d.open = true;
            d.frame_counter += 1;
            d.attempt = 0;
            d.frame_start = now;
            d.energy = 0.0;
            d.slots.clear();
            d.channels.clear();
            d.acks_sent = 0;
            self.out.devices[dev].generated += 1;
        }
        d.attempt += 1;
        let n = d.attempt;
        let channel = if n == 1 || m_c == 1 {
            self.rng.random_range(0..m_c)
        } else {
            let k = self.rng.random_range(0..m_c - 1);
            if k >= d.last_channel {
                k + 1
            } else {
                k
            }
        };
        let tx = self.timing[n - 1].tx;
        d.last_channel = channel;
        d.channels.push(channel);
        d.rdc_release = now + tx / self.cfg.mac.duty_cycle;
        let p = &self.cfg.profile;
        d.energy += p.voltage * p.current_tx * tx;

        let id = self.txs.len();
        self.txs.push(Transmission {
            end: now + tx,
            channel,
            sf: self.sf[n - 1].0,
            collided: false,
        });
        d.current = Some(Attempt {
            tx: id,
            end: now + tx,
            ack: None,
        });
        let c = &mut self.out.devices[dev];
        c.transmissions += 1;
        c.airtime += tx;
        self.occupy(id, now);
        self.schedule(now + tx, Event::TxEnd(dev));
    }

    fn tx_end(&mut self, dev: usize, now: f64) {
        let n = self.devices[dev].attempt;
        let tm = self.timing[n - 1];
        let Some(attempt) = self.devices[dev].current.as_ref() else {
            return;
        };
        let uplink = attempt.tx;
        let attempt_start = now - tm.tx;
        let alpha = self.cfg.mac.channel_quality;
        let received = !self.txs[uplink].collided && self.rng.random::<f64>() < alpha;
        let owed = !(self.cfg.mac.ack_policy == AckPolicy::Case1 && self.devices[dev].acks_sent > 0);

        let slot = if received && owed { self.pick_slot(now) } else { None };
        let mut ack = None;
        if let Some(slot) = slot {
            let ack_id = self.txs.len();
            if slot == Slot::Rs1 {
                let start = now + 1.0;
                let end = start + tm.rs1_ack;
                self.txs.push(Transmission {
                    end,
                    channel: self.txs[uplink].channel,
                    sf: self.sf[n - 1].1,
                    collided: false,
                });
                self.gateway.radio_free_at = end;
                self.gateway.subband_free_at = start + tm.rs1_ack / self.cfg.mac.duty_cycle;
                self.schedule(start, Event::AckStart(ack_id));
            } else if !self.cfg.settings.reserved_channel_rdc_free {
                self.gateway.rs2_free_at = now + 2.0 + tm.rs2_ack / self.cfg.mac.duty_cycle;
            }
            ack = Some((slot, ack_id));
            if attempt_start >= self.warmup_end {
                self.out.acks_per_attempt[n - 1] += 1;
                if slot == Slot::Rs1 {
                    self.out.rs1_acks_per_attempt[n - 1] += 1;
                }
            }
        }

        let d = &mut self.devices[dev];
        d.slots.push(slot);
        if slot.is_some() {
            d.acks_sent += 1;
        }
        if let Some(a) = d.current.as_mut() {
            a.ack = ack;
        }
        let done = match slot {
            Some(Slot::Rs1) => now + 1.0 + tm.rs1_ack,
            Some(Slot::Rs2) => now + 2.0 + tm.rs2_ack,
            None => now + 2.0 + tm.rs2_preamble,
        };
        self.schedule(done, Event::Outcome(dev));
    }

    fn pick_slot(&self, now: f64) -> Option<Slot> {
        let rs1_at = now + 1.0;
        let radio_idle = self.gateway.radio_free_at <= rs1_at;
        let subband_open = self.gateway.subband_free_at <= rs1_at;
        let rs2_open = self.cfg.settings.reserved_channel_rdc_free || self.gateway.rs2_free_at <= now + 2.0;
        match self.cfg.settings.gateway_policy {
            GatewayPolicy::PreferRs1ElseRs2 if radio_idle && subband_open => Some(Slot::Rs1),
            GatewayPolicy::PreferRs1ElseRs2 | GatewayPolicy::ForceRs2 => rs2_open.then_some(Slot::Rs2),
            GatewayPolicy::ForceRs1 => radio_idle.then_some(Slot::Rs1),
        }
    }

    fn outcome(&mut self, dev: usize, now: f64) {
        let n = self.devices[dev].attempt;
        let tm = self.timing[n - 1];
        let Some(attempt) = self.devices[dev].current.take() else {
            return;
        };
        let p = &self.cfg.profile;
        let (v, i_rx, i_idle) = (p.voltage, p.current_rx, p.current_idle);
        let alpha = self.cfg.mac.channel_quality;
        debug_assert!(now >= attempt.end);

        // the second after the uplink is spent idle
        let mut energy = v * i_idle;
        let mut finished = now;
        let success = match attempt.ack {
            Some((Slot::Rs1, id)) => {
                energy += v * i_rx * tm.rs1_ack;
                let ok = !self.txs[id].collided && self.rng.random::<f64>() < alpha;
                if !ok && tm.rs1_ack <= 1.0 {
                    energy += v * (i_idle * (1.0 - tm.rs1_ack) + i_rx * tm.rs2_preamble);
                    finished = attempt.end + 2.0 + tm.rs2_preamble;
                }
                ok
            }
            Some((Slot::Rs2, _)) => {
                energy += v * (i_rx * tm.rs1_preamble + i_idle * (1.0 - tm.rs1_preamble) + i_rx * tm.rs2_ack);
                self.rng.random::<f64>() < alpha
            }
            None => {
                energy += v * (i_rx * (tm.rs1_preamble + tm.rs2_preamble) + i_idle * (1.0 - tm.rs1_preamble));
                false
            }
        };

        let jitter = self.rng.random_range(0.0..=self.timing[0].tx);
        let n_max = self.cfg.mac.max_transmissions;
        let end = self.cfg.settings.sim_duration;
        let d = &mut self.devices[dev];
        d.energy += energy;
        if success {
            let record = self.close(dev, now, false);
            self.keep(record);
            let next = now.max(self.devices[dev].rdc_release) + jitter;
            self.schedule(next, Event::TxStart(dev));
            return;
        }

        let (lo, hi) = (self.cfg.settings.ack_timeout_min, self.cfg.settings.ack_timeout_max);
        let timeout = if hi > lo { self.rng.random_range(lo..=hi) } else { lo };
        let d = &mut self.devices[dev];
        let next = (finished + timeout).max(d.rdc_release) + jitter;
        d.energy += v * i_idle * (next - finished);
        if next > end {
            return;
        }
        if n == n_max {
            let record = self.close(dev, next, true);
            self.keep(record);
        }
        self.schedule(next, Event::TxStart(dev));
    }

    fn close(&mut self, dev: usize, at: f64, dropped: bool) -> FrameRecord {
        let d = &mut self.devices[dev];
        d.open = false;
        let c = &mut self.out.devices[dev];
        if dropped {
            c.dropped += 1;
        } else {
            c.acked += 1;
        }
        FrameRecord {
            run: self.run,
            device: dev,
            frame_counter: d.frame_counter,
            attempts: d.attempt as u32,
            delay_s: at - d.frame_start,
            energy_j: d.energy,
            dropped,
            slots: std::mem::take(&mut d.slots),
            channels: std::mem::take(&mut d.channels),
            acks_sent: d.acks_sent,
            start_s: d.frame_start,
        }
    }

    fn keep(&mut self, record: FrameRecord) {
        if record.start_s >= self.warmup_end {
            self.out.frames.push(record);
        }
    }
}
