use crate::error::{Error, Result};
use crate::linalg::binomial;

/// Default ceiling on the number of basis states.
pub const DEFAULT_CAP: usize = 5_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisKind {
    /// All occupations with exactly `N` particles.
    FixedN(usize),
    /// All occupations with at most `M` particles.
    Truncated(usize),
}

/// Occupation-number basis in graded colexicographic order: by total
/// particle number, then colex within a sector. Ranks come from the
/// combinatorial number system, so lookup needs no hashing.
#[derive(Clone, Debug)]
pub struct FockBasis {
    d: usize,
    kind: BasisKind,
    occupations: Vec<u32>,
    /// First index of each particle-number sector (truncated only; `[0]` for fixed N).
    sector_offsets: Vec<usize>,
    // table[k][p] = C(k + p, k)
    table: Vec<Vec<usize>>,
}

fn sector_size(d: usize, n: usize) -> u128 {
    binomial((n + d - 1) as u64, (d - 1) as u64)
}

impl FockBasis {
    pub fn new(d: usize, kind: BasisKind) -> Result<Self> {
        Self::with_cap(d, kind, DEFAULT_CAP)
    }

    pub fn with_cap(d: usize, kind: BasisKind, cap: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("Fock basis needs at least one mode".into()));
        }
        let (lo, hi) = match kind {
            BasisKind::FixedN(n) => (n, n),
            BasisKind::Truncated(m) => (0, m),
        };
        let total: u128 = (lo..=hi).map(|n| sector_size(d, n)).sum();
        if total > cap as u128 {
            return Err(Error::SizeOverflow { dim: total, cap });
        }
        let table: Vec<Vec<usize>> = (0..d)
            .map(|k| (0..=hi).map(|p| binomial((k + p) as u64, k as u64) as usize).collect())
            .collect();
        let mut basis = FockBasis { d, kind, occupations: Vec::with_capacity(total as usize * d), sector_offsets: Vec::new(), table };
        let mut occ = vec![0u32; d];
        let mut offset = 0usize;
        for n in lo..=hi {
            basis.sector_offsets.push(offset);
            let size = sector_size(d, n) as usize;
            for r in 0..size {
                basis.unrank_in_sector(r, n, &mut occ);
                basis.occupations.extend_from_slice(&occ);
            }
            offset += size;
        }
        Ok(basis)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.occupations.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.occupations.is_empty()
    }

    /// Largest particle number present.
    pub fn max_particles(&self) -> usize {
        match self.kind {
            BasisKind::FixedN(n) | BasisKind::Truncated(n) => n,
        }
    }

    pub fn state(&self, i: usize) -> &[u32] {
        &self.occupations[i * self.d..(i + 1) * self.d]
    }

    pub fn states(&self) -> impl Iterator<Item = &[u32]> {
        self.occupations.chunks_exact(self.d)
    }

    /// Total particle number of state `i`.
    pub fn particles(&self, i: usize) -> usize {
        self.state(i).iter().map(|&x| x as usize).sum()
    }

    /// Index range of the sector with `n` particles.
    pub fn sector_range(&self, n: usize) -> Option<std::ops::Range<usize>> {
        let first = match self.kind {
            BasisKind::FixedN(m) if m == n => 0,
            BasisKind::Truncated(m) if n <= m => self.sector_offsets[n],
            _ => return None,
        };
        Some(first..first + sector_size(self.d, n) as usize)
    }

    fn rank_in_sector(&self, occ: &[u32]) -> usize {
        let mut prefix = occ[0] as usize;
        let mut rank = 0usize;
        for k in 1..self.d {
            let next = prefix + occ[k] as usize;
            rank += self.table[k][next] - self.table[k][prefix];
            prefix = next;
        }
        rank
    }

    fn unrank_in_sector(&self, mut r: usize, mut n: usize, out: &mut [u32]) {
        for k in (1..self.d).rev() {
            // prefix count P before mode k: smallest P with C(k+n,k) - C(k+P,k) <= r
            let top = self.table[k][n];
            let p = self.table[k][..=n].partition_point(|&c| top - c > r);
            r -= top - self.table[k][p];
            out[k] = (n - p) as u32;
            n = p;
        }
        out[0] = n as u32;
    }

    /// Index of an occupation vector, or `None` if it is not in the basis.
    pub fn rank(&self, occ: &[u32]) -> Option<usize> {
        if occ.len() != self.d {
            return None;
        }
        let n: usize = occ.iter().map(|&x| x as usize).sum();
        let offset = match self.kind {
            BasisKind::FixedN(m) if m == n => 0,
            BasisKind::Truncated(m) if n <= m => self.sector_offsets[n],
            _ => return None,
        };
        Some(offset + self.rank_in_sector(occ))
    }

    pub fn unrank(&self, i: usize) -> Vec<u32> {
        self.state(i).to_vec()
    }
}
