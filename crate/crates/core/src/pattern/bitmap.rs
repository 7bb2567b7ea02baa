/// Fixed-size bit set.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Bitmap {
    words: Vec<u64>,
    len: usize,
}

impl Bitmap {
    pub fn new(len: usize) -> Bitmap {
        Bitmap { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn from_bools(bits: impl IntoIterator<Item = bool>) -> Bitmap {
        let mut words = Vec::new();
        let mut len = 0;
        for bit in bits {
            if len % 64 == 0 {
                words.push(0);
            }
            if bit {
                words[len / 64] |= 1 << (len % 64);
            }
            len += 1;
        }
        Bitmap { words, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        if value {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(i))
    }
}

impl std::fmt::Display for Bitmap {
    /// One `0`/`1` digit per position.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for bit in self.iter() {
            f.write_str(if bit { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Membership of event positions in each behaviour's extension. Positions are
/// indices into an event frame that holds the events of one or more cases
/// back to back.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BehaviourBitmap {
    pub behaviours: Vec<Bitmap>,
}

impl BehaviourBitmap {
    pub fn new(behaviours: Vec<Bitmap>) -> BehaviourBitmap {
        BehaviourBitmap { behaviours }
    }

    #[inline]
    pub fn contains(&self, behaviour: usize, pos: usize) -> bool {
        self.behaviours[behaviour].get(pos)
    }
}

/// One case's events inside an event frame: positions `start..start + len`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CaseTrace {
    pub start: usize,
    pub len: usize,
}

impl CaseTrace {
    pub fn new(start: usize, len: usize) -> CaseTrace {
        CaseTrace { start, len }
    }
}
