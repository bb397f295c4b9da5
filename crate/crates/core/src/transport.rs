//! Bandwidth-limited, priority-ordered edge-to-cloud channel.
//!
//! Each step first admits the packets created at that step, evicting the
//! lowest-priority packet when the queue overflows, then serializes bytes
//! under the step's budget. A packet that has started sending finishes before
//! any other starts; it lands `base_latency` steps after its last byte.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TransportError {
    #[error("bandwidth must be positive")]
    ZeroBandwidth,
    #[error("queue capacity must be at least 1")]
    ZeroCapacity,
    #[error("packets must be ordered by creation step")]
    Unordered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelConfig {
    /// Bytes per step.
    pub bandwidth: u64,
    /// Steps from last byte sent to delivery.
    pub base_latency: u64,
    /// Packets waiting, excluding the one being sent.
    pub queue_capacity: usize,
    /// Per-step bandwidth overriding `bandwidth` for the steps it covers.
    pub bandwidth_trace: Option<Vec<u64>>,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            bandwidth: 65_536,
            base_latency: 1,
            queue_capacity: 1024,
            bandwidth_trace: None,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<(), TransportError> {
        if self.bandwidth == 0 || self.bandwidth_trace.as_ref().is_some_and(|t| t.contains(&0)) {
            return Err(TransportError::ZeroBandwidth);
        }
        if self.queue_capacity == 0 {
            return Err(TransportError::ZeroCapacity);
        }
        Ok(())
    }

    pub fn bandwidth_at(&self, t: u64) -> u64 {
        self.bandwidth_trace
            .as_ref()
            .and_then(|tr| tr.get(t as usize).copied())
            .unwrap_or(self.bandwidth)
    }
}

/// The fields of a packet the channel cares about.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketHeader {
    pub id: u64,
    pub created_at: u64,
    pub wire_bytes: u64,
    pub priority: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Delivery {
    Delivered(u64),
    /// Evicted at this step.
    Dropped(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeliveryRecord {
    pub packet_id: u64,
    pub enqueued: u64,
    pub outcome: Delivery,
    pub wire_bytes: u64,
    pub priority: f64,
}

impl DeliveryRecord {
    pub fn delivered_at(&self) -> Option<u64> {
        match self.outcome {
            Delivery::Delivered(t) => Some(t),
            Delivery::Dropped(_) => None,
        }
    }
}

/// Queue key: best packet first.
#[derive(Debug, Clone, Copy)]
struct Queued(PacketHeader);

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .priority
            .total_cmp(&self.0.priority)
            .then(self.0.created_at.cmp(&other.0.created_at))
            .then(self.0.id.cmp(&other.0.id))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

/// Replays `packets` through the channel. Records come back in input order.
pub fn transmit(packets: &[PacketHeader], ch: &ChannelConfig) -> Result<Vec<DeliveryRecord>, TransportError> {
    ch.validate()?;
    if packets.windows(2).any(|w| w[1].created_at < w[0].created_at) {
        return Err(TransportError::Unordered);
    }
    let mut records: Vec<Option<DeliveryRecord>> = vec![None; packets.len()];
    let index_of: std::collections::HashMap<u64, usize> =
        packets.iter().enumerate().map(|(i, p)| (p.id, i)).collect();
    let finish = |p: &PacketHeader, outcome: Delivery, records: &mut Vec<Option<DeliveryRecord>>| {
        records[index_of[&p.id]] = Some(DeliveryRecord {
            packet_id: p.id,
            enqueued: p.created_at,
            outcome,
            wire_bytes: p.wire_bytes,
            priority: p.priority,
        });
    };

    let mut queue: BTreeSet<Queued> = BTreeSet::new();
    let mut sending: Option<(PacketHeader, u64)> = None;
    let mut next = 0;
    let mut t = packets.first().map_or(0, |p| p.created_at);
    while next < packets.len() || !queue.is_empty() || sending.is_some() {
        if queue.is_empty() && sending.is_none() && packets[next].created_at > t {
            t = packets[next].created_at;
        }
        while next < packets.len() && packets[next].created_at == t {
            queue.insert(Queued(packets[next]));
            next += 1;
            if queue.len() > ch.queue_capacity {
                // The last key is the lowest priority, newest among equals.
                let victim = queue.pop_last().expect("queue non-empty");
                finish(&victim.0, Delivery::Dropped(t), &mut records);
            }
        }
        let mut budget = ch.bandwidth_at(t);
        loop {
            if sending.is_none() {
                sending = queue.pop_first().map(|q| (q.0, q.0.wire_bytes));
            }
            let Some((p, remaining)) = sending.as_mut() else { break };
            let take = (*remaining).min(budget);
            *remaining -= take;
            budget -= take;
            if *remaining == 0 {
                let done = *p;
                sending = None;
                finish(&done, Delivery::Delivered(t + ch.base_latency), &mut records);
            } else {
                break;
            }
        }
        t += 1;
    }
    Ok(records.into_iter().map(|r| r.expect("every packet resolved")).collect())
}

pub fn write_delivery_csv<W: Write>(records: &[DeliveryRecord], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["packet_id", "enqueued", "delivered_or_dropped", "wire_bytes", "priority"])?;
    for r in records {
        let outcome = match r.outcome {
            Delivery::Delivered(t) => t.to_string(),
            Delivery::Dropped(_) => "dropped".to_string(),
        };
        w.write_record([
            r.packet_id.to_string(),
            r.enqueued.to_string(),
            outcome,
            r.wire_bytes.to_string(),
            format!("{:.6}", r.priority),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pkt(id: u64, created_at: u64, wire_bytes: u64, priority: f64) -> PacketHeader {
        PacketHeader {
            id,
            created_at,
            wire_bytes,
            priority,
        }
    }

    #[test]
    fn unconstrained_channel_is_fifo() {
        let ch = ChannelConfig {
            bandwidth: u64::MAX,
            base_latency: 2,
            queue_capacity: 100,
            bandwidth_trace: None,
        };
        let ps: Vec<_> = (0..10).map(|i| pkt(i, i / 3, 100, 0.5)).collect();
        let rs = transmit(&ps, &ch).unwrap();
        for (p, r) in ps.iter().zip(&rs) {
            assert_eq!(r.outcome, Delivery::Delivered(p.created_at + 2));
        }
    }

    #[test]
    fn higher_priority_goes_first() {
        let ch = ChannelConfig {
            bandwidth: 100,
            base_latency: 0,
            queue_capacity: 10,
            bandwidth_trace: None,
        };
        let rs = transmit(&[pkt(0, 5, 100, 0.1), pkt(1, 5, 100, 0.9)], &ch).unwrap();
        assert_eq!(rs[1].outcome, Delivery::Delivered(5));
        assert_eq!(rs[0].outcome, Delivery::Delivered(6));
    }

    #[test]
    fn overflow_evicts_lowest() {
        let ch = ChannelConfig {
            bandwidth: 10,
            base_latency: 1,
            queue_capacity: 1,
            bandwidth_trace: None,
        };
        let rs = transmit(&[pkt(0, 0, 10, 0.5), pkt(1, 0, 10, 0.2), pkt(2, 0, 10, 0.8)], &ch).unwrap();
        assert_eq!(rs[0].outcome, Delivery::Dropped(0));
        assert_eq!(rs[1].outcome, Delivery::Dropped(0));
        assert_eq!(rs[2].outcome, Delivery::Delivered(1));
    }

    #[test]
    fn large_packet_spans_steps() {
        let ch = ChannelConfig {
            bandwidth: 40,
            base_latency: 1,
            queue_capacity: 4,
            bandwidth_trace: Some(vec![40, 10, 100]),
        };
        let rs = transmit(&[pkt(0, 0, 60, 0.1), pkt(1, 0, 20, 0.0)], &ch).unwrap();
        // 40 + 10 + 10 bytes of packet 0, then packet 1 in step 2.
        assert_eq!(rs[0].outcome, Delivery::Delivered(3));
        assert_eq!(rs[1].outcome, Delivery::Delivered(3));
    }

    #[test]
    fn rejects_bad_config() {
        let mut ch = ChannelConfig::default();
        ch.bandwidth = 0;
        assert_eq!(transmit(&[], &ch), Err(TransportError::ZeroBandwidth));
        let ch = ChannelConfig {
            queue_capacity: 0,
            ..ChannelConfig::default()
        };
        assert_eq!(transmit(&[], &ch), Err(TransportError::ZeroCapacity));
        let ch = ChannelConfig::default();
        assert_eq!(transmit(&[pkt(0, 3, 1, 0.0), pkt(1, 2, 1, 0.0)], &ch), Err(TransportError::Unordered));
    }
}
