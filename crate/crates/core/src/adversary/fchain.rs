use crate::error::{Error, Result};
use crate::sim::{Adversary, CrashDecision, ProcId, RoundView, Status};

/// Survivor-set sizes at successive epoch boundaries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FChainSpec {
    pub p: u32,
    pub f: u32,
    pub sizes: Vec<u32>,
}

impl FChainSpec {
    /// Each size must be `p − f` or `⌈p/2^i⌉`, and the sequence must not
    /// increase.
    pub fn new(p: u32, f: u32, sizes: Vec<u32>) -> Result<Self> {
        let floor = p - f;
        for (i, &s) in sizes.iter().enumerate() {
            if s < floor {
                return Err(Error::Spec(format!("size {s} is below p - f = {floor}")));
            }
            let halving = (0..32).any(|k| (p as u64).div_ceil(1u64 << k) == s as u64);
            if s != floor && !halving {
                return Err(Error::Spec(format!(
                    "size {s} is neither p - f nor a halving of p"
                )));
            }
            if i > 0 && s > sizes[i - 1] {
                return Err(Error::Spec("sizes must not increase".into()));
            }
            if s > p {
                return Err(Error::Spec(format!("size {s} exceeds p = {p}")));
            }
        }
        Ok(FChainSpec { p, f, sizes })
    }

    pub fn target_after(&self, boundary: usize) -> u32 {
        match self.sizes.get(boundary) {
            Some(&s) => s,
            None => *self.sizes.last().unwrap_or(&self.p),
        }
    }
}

/// Crashes in the last round of regular epochs so that the non-crashed set
/// shrinks to the next target size; the smallest ids survive.
pub struct FChain {
    spec: FChainSpec,
}

impl FChain {
    pub fn new(spec: FChainSpec) -> Self {
        FChain { spec }
    }
}

impl Adversary for FChain {
    fn decide(&mut self, view: &RoundView<'_>) -> Result<Vec<CrashDecision>> {
        let Some(len) = view.protocol.epoch_rounds() else {
            return Err(Error::Spec(
                "this protocol has no epochs for an f-chain to follow".into(),
            ));
        };
        if view.round % len != 0 {
            return Ok(Vec::new());
        }
        let boundary = (view.round / len) as usize;
        let target = self.spec.target_after(boundary) as usize;
        let alive: Vec<ProcId> = (1..=view.p)
            .filter(|&v| !matches!(view.status[v as usize - 1], Status::Crashed(_)))
            .collect();
        if alive.len() <= target {
            return Ok(Vec::new());
        }
        let excess = alive.len() - target;
        Ok(alive
            .into_iter()
            .rev()
            .filter(|&v| view.status[v as usize - 1].is_active())
            .take(excess)
            .map(|v| CrashDecision {
                victim: v,
                delivered: Vec::new(),
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(FChainSpec::new(16, 12, vec![16, 8, 4]).is_ok());
        assert!(FChainSpec::new(16, 12, vec![16]).is_ok());
        assert!(matches!(
            FChainSpec::new(16, 12, vec![16, 8, 2]),
            Err(Error::Spec(_))
        ));
        assert!(matches!(
            FChainSpec::new(16, 12, vec![16, 7]),
            Err(Error::Spec(_))
        ));
        assert!(FChainSpec::new(16, 11, vec![16, 5]).is_ok());
    }
}
