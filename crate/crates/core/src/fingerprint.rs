//! Reproducibility tokens: a SHA-256 over the exact bits of every input.

use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Default)]
pub struct Fingerprint {
    hasher: Sha256,
}

impl Fingerprint {
    pub fn new(tag: &str) -> Self {
        let mut f = Self::default();
        f.str(tag);
        f
    }

    pub fn str(&mut self, s: &str) -> &mut Self {
        self.u64(s.len() as u64);
        self.hasher.update(s.as_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.hasher.update(v.to_le_bytes());
        self
    }

    pub fn f64(&mut self, v: f64) -> &mut Self {
        self.u64(v.to_bits())
    }

    pub fn f64s<'a>(&mut self, vs: impl IntoIterator<Item = &'a f64>) -> &mut Self {
        for v in vs {
            self.f64(*v);
        }
        self
    }

    /// First 64 bits of the digest, as 16 hex digits.
    pub fn finish(&self) -> String {
        let out = self.hasher.clone().finalize();
        out[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}
