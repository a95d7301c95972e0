//! Resume state: RNG positions, exploration state, counters and the replay
//! contents. Layout: `"RGRS"`, u16 version, then little-endian fields.

use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ddpg::DdpgAgent;
use super::replay::{ReplayMemory, Transition};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"RGRS";
const VERSION: u16 = 1;

fn put_rng(buf: &mut Vec<u8>, rng: &ChaCha8Rng) {
    buf.extend_from_slice(&rng.get_seed());
    buf.extend_from_slice(&rng.get_stream().to_le_bytes());
    buf.extend_from_slice(&rng.get_word_pos().to_le_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Data("resume snapshot truncated".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn arr<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("sized"))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.arr()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.arr()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.arr()?))
    }
    fn rng(&mut self) -> Result<ChaCha8Rng> {
        let seed: [u8; 32] = self.arr()?;
        let stream = self.u64()?;
        let pos = u128::from_le_bytes(self.arr()?);
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(stream);
        rng.set_word_pos(pos);
        Ok(rng)
    }
    fn floats(&mut self, n: usize) -> Result<Vec<f32>> {
        Ok(self
            .take(n * 4)?
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
            .collect())
    }
}

pub fn encode_resume(agent: &DdpgAgent) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    put_rng(&mut buf, &agent.rng);
    put_rng(&mut buf, agent.replay.rng());
    for v in [agent.ou.theta, agent.ou.mu, agent.ou.sigma, agent.ou.dt, agent.ou.x] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in [agent.total_steps, agent.episodes, agent.updates] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let r = &agent.replay;
    buf.extend_from_slice(&(r.capacity() as u32).to_le_bytes());
    for d in r.state_shape() {
        buf.extend_from_slice(&(d as u32).to_le_bytes());
    }
    buf.extend_from_slice(&(r.len() as u32).to_le_bytes());
    for t in r.iter_oldest_first() {
        buf.extend_from_slice(&t.action.to_le_bytes());
        buf.extend_from_slice(&t.reward.to_le_bytes());
        buf.push(t.done as u8);
        for v in t.state.iter().chain(t.next_state.iter()) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf
}

/// Restores the state written by [`encode_resume`] into an agent built with
/// the same configuration.
pub fn decode_resume(agent: &mut DdpgAgent, buf: &[u8]) -> Result<()> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Data("not a resume snapshot".into()));
    }
    let version = u16::from_le_bytes(r.arr()?);
    if version != VERSION {
        return Err(Error::Data(format!("unsupported snapshot version {version}")));
    }
    let rng = r.rng()?;
    let replay_rng = r.rng()?;
    let (theta, mu, sigma, dt, x) = (r.f64()?, r.f64()?, r.f64()?, r.f64()?, r.f64()?);
    let (total_steps, episodes, updates) = (r.u64()?, r.u64()?, r.u64()?);
    let capacity = r.u32()? as usize;
    let shape = [r.u32()? as usize, r.u32()? as usize, r.u32()? as usize];
    if capacity != agent.replay.capacity() || shape != agent.replay.state_shape() {
        return Err(Error::Data(format!(
            "snapshot replay {capacity} x {shape:?} does not match agent {} x {:?}",
            agent.replay.capacity(),
            agent.replay.state_shape()
        )));
    }
    let count = r.u32()? as usize;
    let n: usize = shape.iter().product();
    let mut items: Vec<Transition> = Vec::with_capacity(count.min(capacity));
    for _ in 0..count {
        let action = r.f64()?;
        let reward = r.f64()?;
        let done = r.take(1)?[0] != 0;
        let s = r.floats(n)?;
        let ns = r.floats(n)?;
        let state: Arc<[f32]> = match items.last() {
            Some(prev) if *prev.next_state == *s => prev.next_state.clone(),
            _ => Arc::from(s),
        };
        items.push(Transition {
            state,
            action,
            reward,
            next_state: Arc::from(ns),
            done,
        });
    }
    if r.pos != buf.len() {
        return Err(Error::Data("trailing bytes in resume snapshot".into()));
    }
    agent.replay = ReplayMemory::restore(capacity, shape, items, replay_rng)?;
    agent.rng = rng;
    agent.ou.theta = theta;
    agent.ou.mu = mu;
    agent.ou.sigma = sigma;
    agent.ou.dt = dt;
    agent.ou.x = x;
    agent.total_steps = total_steps;
    agent.episodes = episodes;
    agent.updates = updates;
    Ok(())
}

pub fn save_resume(agent: &DdpgAgent, path: &Path) -> Result<()> {
    std::fs::write(path, encode_resume(agent))?;
    Ok(())
}

pub fn load_resume(agent: &mut DdpgAgent, path: &Path) -> Result<()> {
    let buf = std::fs::read(path)?;
    decode_resume(agent, &buf)
}
