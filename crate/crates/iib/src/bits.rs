//! Packed bit vectors with word-level XOR/popcount.

/// Fixed-length bit string stored in 64-bit blocks, bit 0 at the lowest
/// bit of the first block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitBuffer {
    blocks: Vec<u64>,
    len: usize,
}

impl BitBuffer {
    pub fn with_capacity(bits: usize) -> Self {
        BitBuffer {
            blocks: Vec::with_capacity(bits.div_ceil(64)),
            len: 0,
        }
    }

    pub fn zeros(bits: usize) -> Self {
        BitBuffer {
            blocks: vec![0; bits.div_ceil(64)],
            len: bits,
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut buf = BitBuffer::with_capacity(bits.len());
        for &b in bits {
            buf.push(b);
        }
        buf
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, bit: bool) {
        let block = self.len / 64;
        if block == self.blocks.len() {
            self.blocks.push(0);
        }
        if bit {
            self.blocks[block] |= 1u64 << (self.len % 64);
        }
        self.len += 1;
    }

    pub fn get(&self, idx: usize) -> bool {
        assert!(idx < self.len, "bit index {idx} out of range {}", self.len);
        (self.blocks[idx / 64] >> (idx % 64)) & 1 == 1
    }

    pub fn set(&mut self, idx: usize, bit: bool) {
        assert!(idx < self.len, "bit index {idx} out of range {}", self.len);
        let mask = 1u64 << (idx % 64);
        if bit {
            self.blocks[idx / 64] |= mask;
        } else {
            self.blocks[idx / 64] &= !mask;
        }
    }

    /// Number of set bits in `self XOR other` over the whole string.
    pub fn xor_popcount(&self, other: &BitBuffer) -> u32 {
        debug_assert_eq!(self.len, other.len);
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }

    /// Number of set bits in `self XOR other` over the half-open bit range
    /// `start..end`.
    pub fn xor_popcount_range(&self, other: &BitBuffer, start: usize, end: usize) -> u32 {
        debug_assert_eq!(self.len, other.len);
        debug_assert!(start <= end && end <= self.len);
        if start == end {
            return 0;
        }
        let first = start / 64;
        let last = (end - 1) / 64;
        let mut total = 0u32;
        for block in first..=last {
            let mut x = self.blocks[block] ^ other.blocks[block];
            if block == first {
                x &= !0u64 << (start % 64);
            }
            if block == last {
                let tail = end - block * 64;
                if tail < 64 {
                    x &= (1u64 << tail) - 1;
                }
            }
            total += x.count_ones();
        }
        total
    }

    pub fn count_ones(&self) -> u32 {
        self.blocks.iter().map(|b| b.count_ones()).sum()
    }

    /// Bitwise complement of the same length.
    pub fn complemented(&self) -> BitBuffer {
        let mut out = self.clone();
        for b in &mut out.blocks {
            *b = !*b;
        }
        if out.len % 64 != 0 {
            let last = out.blocks.len() - 1;
            out.blocks[last] &= (1u64 << (out.len % 64)) - 1;
        }
        out
    }

    /// Little-endian byte image: byte `j` carries bits `8j..8j+8`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len.div_ceil(8)];
        for (j, byte) in out.iter_mut().enumerate() {
            *byte = ((self.blocks[j / 8] >> (8 * (j % 8))) & 0xFF) as u8;
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], len: usize) -> Self {
        assert_eq!(bytes.len(), len.div_ceil(8));
        let mut buf = BitBuffer::zeros(len);
        for (j, &byte) in bytes.iter().enumerate() {
            buf.blocks[j / 8] |= (byte as u64) << (8 * (j % 8));
        }
        if len % 64 != 0 && !buf.blocks.is_empty() {
            let last = buf.blocks.len() - 1;
            buf.blocks[last] &= (1u64 << (len % 64)) - 1;
        }
        buf
    }
}
