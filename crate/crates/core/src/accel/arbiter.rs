use alloc::vec::Vec;

/// Round-robin pointer plus the history of grants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArbiterState {
    channels: usize,
    pointer: usize,
    grants: Vec<usize>,
    log: bool,
}

impl ArbiterState {
    /// `channels` must lie in `1..=64`.
    pub fn new(channels: usize) -> Self {
        assert!((1..=64).contains(&channels), "arbiter supports 1..=64 requesters");
        ArbiterState {
            channels,
            pointer: 0,
            grants: Vec::new(),
            log: true,
        }
    }

    /// Same arbiter without the grant log, for long runs.
    pub fn unlogged(channels: usize) -> Self {
        ArbiterState {
            log: false,
            ..Self::new(channels)
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pointer(&self) -> usize {
        self.pointer
    }

    pub fn grants(&self) -> &[usize] {
        &self.grants
    }
}

/// Grants the first requester at or after the pointer, scanning cyclically, and moves the
/// pointer just past it. Bit `i` of `requests` is channel `i`; bits beyond the channel count
/// are ignored.
pub fn arbiter_grant(state: &mut ArbiterState, requests: u64) -> Option<usize> {
    let n = state.channels;
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let requests = requests & mask;
    if requests == 0 {
        return None;
    }
    // rotate so the pointer sits at bit 0, then take the lowest set bit
    let p = state.pointer as u32;
    let rotated = if p == 0 {
        requests
    } else {
        (requests >> p) | (requests << (n as u32 - p))
    } & mask;
    let granted = (state.pointer + rotated.trailing_zeros() as usize) % n;
    state.pointer = (granted + 1) % n;
    if state.log {
        state.grants.push(granted);
    }
    Some(granted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    /// Walks the channels one by one from the pointer.
    fn scan(pointer: usize, n: usize, requests: u64) -> Option<usize> {
        (0..n).map(|d| (pointer + d) % n).find(|&c| requests >> c & 1 == 1)
    }

    #[test]
    fn single_requester() {
        let mut s = ArbiterState::new(8);
        assert_eq!(arbiter_grant(&mut s, 1 << 3), Some(3));
        assert_eq!(s.pointer(), 4);
    }

    #[test]
    fn all_requesting_rotates() {
        let mut s = ArbiterState::new(8);
        let got: Vec<_> = (0..8).map(|_| arbiter_grant(&mut s, 0xff).unwrap()).collect();
        assert_eq!(got, (0..8).collect::<Vec<_>>());
        assert_eq!(s.grants(), &got[..]);
    }

    #[test]
    fn empty_mask_keeps_pointer() {
        let mut s = ArbiterState::new(8);
        arbiter_grant(&mut s, 1 << 5);
        assert_eq!(arbiter_grant(&mut s, 0), None);
        assert_eq!(s.pointer(), 6);
        assert_eq!(s.grants(), &[5]);
    }

    #[test]
    fn wraps_past_the_end() {
        let mut s = ArbiterState::new(8);
        arbiter_grant(&mut s, 1 << 6);
        assert_eq!(arbiter_grant(&mut s, 0b10 | 1 << 6), Some(1));
        assert_eq!(s.pointer(), 2);
    }

    proptest! {
        #[test]
        fn matches_linear_scan(n in 1usize..=64, masks in proptest::collection::vec(any::<u64>(), 1..50)) {
            let mut s = ArbiterState::new(n);
            let mut pointer = 0;
            for m in masks {
                let expect = scan(pointer, n, m);
                prop_assert_eq!(arbiter_grant(&mut s, m), expect);
                if let Some(g) = expect { pointer = (g + 1) % n; }
                prop_assert_eq!(s.pointer(), pointer);
                prop_assert!(s.pointer() < n);
            }
        }

        #[test]
        fn backlogged_channels_share_fairly(n in 1usize..=16, grants in 1usize..500) {
            let mut s = ArbiterState::new(n);
            let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
            let mut counts = vec![0usize; n];
            for _ in 0..grants {
                counts[arbiter_grant(&mut s, all).unwrap()] += 1;
            }
            for c in counts {
                prop_assert!(c >= grants / n && c <= grants.div_ceil(n));
            }
        }
    }
}
